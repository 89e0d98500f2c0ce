#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "pathovox/svm.hpp"

using namespace pathovox;
using pathovox::testing::make_blobs;

namespace {

// Independent dual QP oracle: projected gradient on
//   min 1/2 a'Qa - 1'a   s.t. 0 <= a <= C, y'a = 0.
// Projection onto the box-hyperplane intersection via bisection on the
// multiplier of the equality constraint.
struct QpOracle {
    std::vector<double> alpha;
    double objective = 0.0;  // dual objective W(a) = 1'a - 1/2 a'Qa
};

QpOracle qp_solve(const Matrix& x, const std::vector<int>& y, double c, double gamma,
                  std::size_t iters = 400000) {
    const std::size_t n = x.rows();
    std::vector<double> q(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            q[i * n + j] = y[i] * y[j] * rbf_kernel(x.row(i), x.row(j), x.cols(), gamma);

    auto project = [&](std::vector<double>& v) {
        double bound = c + 1.0;
        for (double vi : v) bound = std::max(bound, std::abs(vi) + c);
        double lo = -bound, hi = bound;
        for (int it = 0; it < 200; ++it) {
            double lam = (lo + hi) / 2;
            double s = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double ai = std::clamp(v[i] - lam * y[i], 0.0, c);
                s += y[i] * ai;
            }
            if (s > 0) lo = lam;
            else hi = lam;
        }
        double lam = (lo + hi) / 2;
        for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam * y[i], 0.0, c);
    };

    double lip = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
        lip = std::max(lip, row);
    }
    double step = 1.0 / lip;

    std::vector<double> a(n, 0.0), g(n), trial(n);
    project(a);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += q[i * n + j] * a[j];
            g[i] = s - 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) trial[i] = a[i] - step * g[i];
        project(trial);
        double move = 0;
        for (std::size_t i = 0; i < n; ++i) move += std::abs(trial[i] - a[i]);
        a.swap(trial);
        if (move < 1e-14) break;
    }

    QpOracle res;
    res.alpha = a;
    double quad = 0, lin = 0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += a[i];
        for (std::size_t j = 0; j < n; ++j) quad += a[i] * q[i * n + j] * a[j];
    }
    res.objective = lin - 0.5 * quad;
    return res;
}

double dual_objective(const Matrix& x, const std::vector<int>& y, const std::vector<double>& a,
                      double gamma) {
    double lin = 0, quad = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        lin += a[i];
        for (std::size_t j = 0; j < x.rows(); ++j)
            quad += a[i] * a[j] * y[i] * y[j] * rbf_kernel(x.row(i), x.row(j), x.cols(), gamma);
    }
    return lin - 0.5 * quad;
}

double decision_from_solution(const Matrix& x, const std::vector<int>& y,
                              const BinarySvmSolution& sol, const std::vector<double>& pt,
                              double gamma) {
    double f = sol.bias;
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (sol.alpha[i] > 0)
            f += sol.alpha[i] * y[i] * rbf_kernel(x.row_copy(i), pt, gamma);
    return f;
}

// Max KKT violation over all training points given a dense solution.
double kkt_violation(const Matrix& x, const std::vector<int>& y, const BinarySvmSolution& sol,
                     double c, double gamma) {
    double worst = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double yf = y[i] * decision_from_solution(x, y, sol, x.row_copy(i), gamma);
        double a = sol.alpha[i];
        if (a <= 0) worst = std::max(worst, 1.0 - yf);          // want yf >= 1
        else if (a >= c) worst = std::max(worst, yf - 1.0);     // want yf <= 1
        else worst = std::max(worst, std::abs(yf - 1.0));       // free: yf == 1
    }
    return worst;
}

}  // namespace

TEST_CASE("rbf kernel formula") {
    std::vector<double> x{0.0}, y{1.0};
    REQUIRE(rbf_kernel(x, x, 1.0) == 1.0);
    REQUIRE(rbf_kernel(x, y, 1.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));

    Rng rng(51);
    std::vector<double> a(768), b(768);
    for (std::size_t i = 0; i < 768; ++i) {
        a[i] = rng.uniform(-2, 2);
        b[i] = rng.uniform(-2, 2);
    }
    // Naive oracle: accumulate squared distance separately.
    double d2 = 0;
    for (std::size_t i = 0; i < 768; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    for (double gamma : {1e-5, 1e-3, 1e-1})
        REQUIRE(rbf_kernel(a, b, gamma) == Catch::Approx(std::exp(-gamma * d2)).epsilon(1e-12));

    std::vector<double> shorter{1.0};
    REQUIRE_THROWS_AS(rbf_kernel(a, shorter, 1.0), Error);
}

TEST_CASE("two points: decision boundary at the midpoint") {
    Matrix x = Matrix::from_rows({{-1, 0}, {1, 0}});
    std::vector<int> y{1, -1};
    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.5;
    auto sol = smo_solve(x, y, cfg);
    REQUIRE(sol.converged);

    REQUIRE(decision_from_solution(x, y, sol, {-0.5, 0.0}, cfg.gamma) > 0);
    REQUIRE(decision_from_solution(x, y, sol, {0.5, 0.0}, cfg.gamma) < 0);
    // Exactly halfway: symmetric problem, decision ~0.
    REQUIRE(std::abs(decision_from_solution(x, y, sol, {0.0, 0.0}, cfg.gamma)) < 1e-9);
}

TEST_CASE("XOR layout reaches full training accuracy and the QP optimum") {
    Matrix x = Matrix::from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
    std::vector<int> y{1, 1, -1, -1};
    RbfSvmConfig cfg;
    cfg.c = 50;
    cfg.gamma = 1.0;
    auto sol = smo_solve(x, y, cfg);
    REQUIRE(sol.converged);

    for (std::size_t i = 0; i < 4; ++i) {
        double f = decision_from_solution(x, y, sol, x.row_copy(i), cfg.gamma);
        REQUIRE(f * y[i] > 0);
    }

    auto oracle = qp_solve(x, y, cfg.c, cfg.gamma);
    double w_smo = dual_objective(x, y, sol.alpha, cfg.gamma);
    REQUIRE(w_smo >= oracle.objective - 1e-6);
    // Same optimum from both solvers on this tiny strictly convex problem.
    REQUIRE(w_smo == Catch::Approx(oracle.objective).margin(1e-5));
}

TEST_CASE("random separable problem matches the QP oracle and satisfies KKT") {
    Rng rng(77);
    Dataset d = make_blobs(Matrix::from_rows({{0, 0, 0, 0}, {4, 0, 0, 0}}), {0.5, 0.5}, {20, 20},
                           Vocabulary({"n", "p"}), rng);
    Matrix x = d.features;
    std::vector<int> y;
    for (int l : d.labels) y.push_back(l == 0 ? 1 : -1);

    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.5;
    cfg.tol = 1e-6;  // tight stop so the optimum comparison below is meaningful
    auto sol = smo_solve(x, y, cfg);
    REQUIRE(sol.converged);

    // Box feasibility and the equality constraint.
    double ay = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        REQUIRE(sol.alpha[i] >= 0.0);
        REQUIRE(sol.alpha[i] <= cfg.c);
        ay += sol.alpha[i] * y[i];
    }
    REQUIRE(std::abs(ay) < 1e-8);

    // KKT within the configured tolerance.
    REQUIRE(kkt_violation(x, y, sol, cfg.c, cfg.gamma) <= cfg.tol);

    // Dual objective not worse than the independently coded solver.
    auto oracle = qp_solve(x, y, cfg.c, cfg.gamma);
    REQUIRE(dual_objective(x, y, sol.alpha, cfg.gamma) >= oracle.objective - 1e-6);
}

TEST_CASE("overlapping classes: box-bound alphas also satisfy KKT") {
    Rng rng(78);
    Dataset d = make_blobs(Matrix::from_rows({{0, 0}, {1.5, 0}}), {1.0, 1.0}, {30, 30},
                           Vocabulary({"n", "p"}), rng);
    std::vector<int> y;
    for (int l : d.labels) y.push_back(l == 0 ? 1 : -1);
    RbfSvmConfig cfg;
    cfg.c = 5;
    cfg.gamma = 0.1;
    auto sol = smo_solve(d.features, y, cfg);
    REQUIRE(sol.converged);

    bool some_at_bound = false;
    for (double a : sol.alpha) some_at_bound = some_at_bound || a == cfg.c;
    REQUIRE(some_at_bound);  // overlap forces bounded support vectors
    REQUIRE(kkt_violation(d.features, y, sol, cfg.c, cfg.gamma) <= cfg.tol);

    // Optimality comparison needs a tight stop; default tol trades a ~1e-6
    // objective gap for speed.
    RbfSvmConfig tight = cfg;
    tight.tol = 1e-6;
    auto sol2 = smo_solve(d.features, y, tight);
    auto oracle = qp_solve(d.features, y, cfg.c, cfg.gamma);
    REQUIRE(dual_objective(d.features, y, sol2.alpha, cfg.gamma) >= oracle.objective - 1e-6);
}

TEST_CASE("iteration cap yields a warning flag, not an error") {
    Rng rng(79);
    Dataset d = make_blobs(Matrix::from_rows({{0, 0}, {0.5, 0}}), {1, 1}, {25, 25},
                           Vocabulary({"n", "p"}), rng);
    std::vector<int> y;
    for (int l : d.labels) y.push_back(l == 0 ? 1 : -1);
    RbfSvmConfig cfg;
    cfg.c = 50;
    cfg.gamma = 1.0;
    cfg.max_iter = 2;
    auto sol = smo_solve(d.features, y, cfg);
    REQUIRE(!sol.converged);
    REQUIRE(sol.iterations == 2);

    Dataset big = d;
    SvmModel m = svm_fit(big, cfg);
    REQUIRE(!m.all_converged());
}

TEST_CASE("multiclass pair counts") {
    Rng rng(80);
    Vocabulary v2({"a", "b"});
    Dataset d2 = make_blobs(Matrix::from_rows({{0, 0}, {4, 4}}), {0.4, 0.4}, {8, 8}, v2, rng);
    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.5;
    REQUIRE(svm_fit(d2, cfg).pairs.size() == 1);

    Vocabulary v5({"a", "b", "c", "d", "e"});
    Matrix means = Matrix::from_rows({{0, 0}, {6, 0}, {0, 6}, {6, 6}, {3, 12}});
    Dataset d5 = make_blobs(means, {0.4, 0.4, 0.4, 0.4, 0.4}, {6, 6, 6, 6, 6}, v5, rng);
    SvmModel m5 = svm_fit(d5, cfg);
    REQUIRE(m5.pairs.size() == 10);
    // Pairs enumerate (a,b) with a < b in vocabulary order.
    REQUIRE(m5.pairs[0].class_a == 0);
    REQUIRE(m5.pairs[0].class_b == 1);
    REQUIRE(m5.pairs[9].class_a == 3);
    REQUIRE(m5.pairs[9].class_b == 4);

    // The verbatim paper grid values are legal configs.
    for (double c : {5.0, 10.0, 20.0, 50.0})
        for (double g : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1}) {
            RbfSvmConfig gc;
            gc.c = c;
            gc.gamma = g;
            REQUIRE_NOTHROW(gc.validate());
        }
}

TEST_CASE("predict: votes, tie-breaking, and an independent vote oracle") {
    Rng rng(81);
    Vocabulary v({"a", "b", "c"});
    Matrix means = Matrix::from_rows({{0, 0}, {5, 0}, {0, 5}});
    Dataset d = make_blobs(means, {0.6, 0.6, 0.6}, {12, 12, 12}, v, rng);
    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.3;
    SvmModel m = svm_fit(d, cfg);

    // Deep-inside point goes to its own class.
    REQUIRE(m.predict({0, 0}) == 0);
    REQUIRE(m.predict({5, 0}) == 1);
    REQUIRE(m.predict({0, 5}) == 2);

    // Vote oracle: recompute pairwise decisions independently and re-run the
    // documented tie-break (votes, then summed |f|, then lowest index).
    for (int t = 0; t < 200; ++t) {
        std::vector<double> pt{rng.uniform(-2, 7), rng.uniform(-2, 7)};
        std::vector<double> vote(3, 0), margin(3, 0);
        for (const auto& p : m.pairs) {
            double f = p.decision(pt.data(), 2, cfg.gamma);
            int w = f >= 0 ? p.class_a : p.class_b;
            vote[w] += 1;
            margin[w] += std::abs(f);
        }
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (vote[k] > vote[best] || (vote[k] == vote[best] && margin[k] > margin[best]))
                best = k;
        REQUIRE(m.predict(pt) == best);
    }

    // votes() exposes counts summing to K(K-1)/2.
    auto votes = m.votes({1.0, 1.0});
    REQUIRE(votes.size() == 3);
    REQUIRE(votes[0] + votes[1] + votes[2] == Catch::Approx(3.0));
}

TEST_CASE("training-row permutation does not change predictions") {
    Rng rng(82);
    Vocabulary v({"a", "b"});
    Dataset d = make_blobs(Matrix::from_rows({{0, 0}, {3, 1}}), {0.8, 0.8}, {15, 15}, v, rng);
    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.4;
    SvmModel m1 = svm_fit(d, cfg);

    Rng perm_rng(4);
    auto perm = seeded_shuffle(d.size(), perm_rng);
    Dataset shuffled = d.subset(perm);
    SvmModel m2 = svm_fit(shuffled, cfg);

    for (int t = 0; t < 100; ++t) {
        std::vector<double> pt{rng.uniform(-2, 5), rng.uniform(-2, 3)};
        REQUIRE(m1.predict(pt) == m2.predict(pt));
    }
}

TEST_CASE("standardize flag equals manual standardization") {
    Rng rng(83);
    Vocabulary v({"a", "b"});
    // Wildly different feature scales.
    Dataset d = make_blobs(Matrix::from_rows({{0, 0}, {2, 2000}}), {0.5, 0.5}, {10, 10}, v, rng);
    for (std::size_t i = 0; i < d.size(); ++i) d.features.at(i, 1) *= 100.0;

    RbfSvmConfig cfg;
    cfg.c = 10;
    cfg.gamma = 0.5;
    cfg.standardize = true;
    SvmModel m = svm_fit(d, cfg);

    // Manual z-scoring with population std, then an unstandardized fit.
    Dataset z = d;
    for (std::size_t c = 0; c < 2; ++c) {
        double mean = 0, var = 0;
        for (std::size_t i = 0; i < z.size(); ++i) mean += z.features.at(i, c);
        mean /= z.size();
        for (std::size_t i = 0; i < z.size(); ++i) {
            double diff = z.features.at(i, c) - mean;
            var += diff * diff;
        }
        double sd = std::sqrt(var / z.size());
        for (std::size_t i = 0; i < z.size(); ++i)
            z.features.at(i, c) = (z.features.at(i, c) - mean) / sd;
    }
    RbfSvmConfig plain = cfg;
    plain.standardize = false;
    SvmModel mz = svm_fit(z, plain);

    for (std::size_t i = 0; i < d.size(); ++i)
        REQUIRE(m.predict(d.features.row_copy(i)) == mz.predict(z.features.row_copy(i)));
}

TEST_CASE("fit input validation") {
    RbfSvmConfig cfg;
    cfg.c = -1;
    REQUIRE_THROWS_AS(cfg.validate(), Error);

    Dataset one;
    one.features = Matrix::from_rows({{0}, {1}});
    one.labels = {0, 0};
    one.vocab = Vocabulary({"only"});
    RbfSvmConfig ok;
    REQUIRE_THROWS_AS(svm_fit(one, ok), Error);

    Dataset missing;
    missing.features = Matrix::from_rows({{0}, {1}});
    missing.labels = {0, 0};
    missing.vocab = Vocabulary({"a", "b"});
    try {
        svm_fit(missing, ok);
        FAIL("expected svm_empty_class");
    } catch (const Error& e) {
        REQUIRE(e.code() == "svm_empty_class");
    }
}
