// acceptance — end-to-end rehearsal of the pinned acceptance criteria.
//
// Prints exactly one line per criterion ("criterion  N: PASS|FAIL  detail")
// and exits non-zero if any criterion fails. Criteria 1-3 and 5a share one
// synthetic five-class corpus mirroring the reproduced class shares; the
// minimum class-mean separation is 5x the mean within-class std (1.0) and
// the noise rehearsal uses sigma = 1x that same std.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pathovox/embedding.hpp"
#include "pathovox/model_io.hpp"
#include "pathovox/protocol.hpp"
#include "pathovox/reports.hpp"
#include "pathovox/reverb.hpp"
#include "pathovox/tsne.hpp"

namespace fs = std::filesystem;
using namespace pathovox;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3) { return fmt_fixed(v, prec); }

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::size_t worker_count() {
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------
// Synthetic corpora.

Dataset gaussian_blobs(const Matrix& means, const std::vector<double>& stds,
                       const std::vector<std::size_t>& counts, const Vocabulary& vocab,
                       Rng& rng) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    Dataset d;
    d.vocab = vocab;
    d.features = Matrix(total, means.cols());
    std::size_t row = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t s = 0; s < counts[c]; ++s, ++row) {
            double* dst = d.features.row(row);
            for (std::size_t f = 0; f < means.cols(); ++f)
                dst[f] = means.at(c, f) + stds[c] * rng.gaussian();
            d.labels.push_back(static_cast<int>(c));
            d.ids.push_back("u" + std::to_string(row));
        }
    }
    return d;
}

constexpr std::size_t kDim = 32;
// 3.0 / 6.4 / 5.1 / 42.0 / 43.5 % of N = 1000; classes CTL CLP PD OSCC LAR.
const std::vector<std::size_t> kCounts{30, 64, 51, 420, 435};
// Two tight/wide pairs at the minimum separation (5.0 = 5x the mean std of
// 1.0) plus one isolated class. The clean-optimal boundary inside each pair
// hugs the tight class (sigma-proportional split); unit noise quadruples the
// tight std but barely widens the wide one, so the optimal boundary moves by
// about one std — a first-order shift that every family can only regain by
// retraining on noisy data. That is the criterion-2 recovery mechanism.
const std::vector<double> kStds{1.0, 0.3, 1.7, 0.3, 1.7};

Dataset rehearsal_corpus(std::uint64_t seed) {
    Matrix means(5, kDim);
    means.at(3, 0) = 0.0;                       // OSCC (tight)
    means.at(4, 0) = 5.0;                       // LAR (wide), 5.0 from OSCC
    means.at(1, 1) = 9.0;                       // CLP (tight)
    means.at(2, 1) = 9.0; means.at(2, 2) = 5.0; // PD (wide), 5.0 from CLP
    means.at(0, 3) = 9.0;                       // CTL, >= 9 from everything
    Rng rng(seed);
    return gaussian_blobs(means, kStds, kCounts,
                          Vocabulary({"CTL", "CLP", "PD", "OSCC", "LAR"}), rng);
}

Dataset add_noise(const Dataset& d, double sigma, Rng rng) {
    Dataset out = d;
    for (std::size_t i = 0; i < out.features.rows(); ++i)
        for (std::size_t f = 0; f < out.features.cols(); ++f)
            out.features.at(i, f) += sigma * rng.gaussian();
    return out;
}

// The reproduced hyperparameter grids stay verbatim; only the per-fit budgets
// (boosting rounds, FFN epochs) are trimmed so 820 cross-validated fits stay
// inside the five-minute bound.
GridSpec acceptance_grid(ModelFamily f) {
    GridSpec g = GridSpec::defaults(f);
    g.xgb_base.rounds = 20;
    g.ffn_base.epochs = 6;
    return g;
}

struct PipelineRun {
    GridSearchResult cv;
    AnyModel model;
    MetricsReport test;
};

PipelineRun run_pipeline(ModelFamily family, const Dataset& train, const Dataset& test,
                         std::uint64_t seed) {
    const GridSpec grid = acceptance_grid(family);
    const SmoteConfig smote{5, 0};
    PipelineRun r;
    r.cv = grid_search(train, grid, smote, subseed(seed, 6), worker_count());
    r.model = train_final(train, grid, r.cv.best, smote, subseed(seed, 6));
    r.test = evaluate(r.model, test);
    return r;
}

constexpr std::uint64_t kCorpusSeed = 17;
constexpr std::uint64_t kProtocolSeed = 2024;

struct SharedState {
    Dataset data, train, test;
    std::map<ModelFamily, PipelineRun> runs;
    bool ready = false;
};

// ---------------------------------------------------------------------------
// Criterion 1: five-class rehearsal, full pipeline, macro F1 >= 0.95 each.

Outcome criterion1(SharedState& st) {
    Stopwatch watch;
    st.data = rehearsal_corpus(kCorpusSeed);
    const SplitIndices split = stratified_split(st.data, 0.2, subseed(kProtocolSeed, 5));
    st.train = st.data.subset(split.train);
    st.test = st.data.subset(split.test);

    std::ostringstream os;
    bool pass = true;
    os << "macro F1";
    for (ModelFamily f : {ModelFamily::Svm, ModelFamily::Xgb, ModelFamily::Ffn}) {
        st.runs[f] = run_pipeline(f, st.train, st.test, kProtocolSeed);
        const double f1 = st.runs[f].test.macro_f1;
        os << ' ' << family_name(f) << '=' << fmt(f1);
        pass = pass && f1 >= 0.95;
    }
    const double secs = watch.seconds();
    pass = pass && secs <= 300.0;
    os << " (need >= 0.95 each); runtime " << fmt(secs, 1) << " s (limit 300)";
    st.ready = pass;
    return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 2: test-only noise drops >= 5 points; noisy retraining recovers
// at least half of the drop. sigma = 1.0 = 1 x mean within-class std.

Outcome criterion2(SharedState& st) {
    if (!st.ready) return {false, "skipped: criterion 1 did not complete"};
    const double sigma = 1.0;
    const Dataset noisy_test = add_noise(st.test, sigma, Rng(kProtocolSeed).fork(100));
    const Dataset noisy_train = add_noise(st.train, sigma, Rng(kProtocolSeed).fork(101));

    std::ostringstream os;
    bool pass = true;
    for (ModelFamily f : {ModelFamily::Svm, ModelFamily::Xgb, ModelFamily::Ffn}) {
        const double clean = st.runs[f].test.macro_f1;
        const double dropped = evaluate(st.runs[f].model, noisy_test).macro_f1;
        const PipelineRun retrained = run_pipeline(f, noisy_train, noisy_test, kProtocolSeed);
        const double recovered = retrained.test.macro_f1;
        const double drop_pts = 100.0 * (clean - dropped);
        const bool ok =
            drop_pts >= 5.0 && recovered >= dropped + 0.5 * (clean - dropped);
        pass = pass && ok;
        os << family_name(f) << ": clean=" << fmt(clean) << " noisy=" << fmt(dropped)
           << " retrained=" << fmt(recovered) << (ok ? "" : " [!]") << "  ";
    }
    os << "(need drop >= 5 pts and recovery >= half)";
    return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: SMOTE balances to the majority count, synthetic rows are
// convex combinations (residual <= 1e-9) of a parent and one of its k
// nearest same-class neighbours, and no synthetic row reaches evaluation.

double segment_residual(const double* s, const double* a, const double* b, std::size_t dim) {
    double num = 0, den = 0;
    for (std::size_t f = 0; f < dim; ++f) {
        num += (s[f] - a[f]) * (b[f] - a[f]);
        den += (b[f] - a[f]) * (b[f] - a[f]);
    }
    const double t = den > 0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
    double r2 = 0;
    for (std::size_t f = 0; f < dim; ++f) {
        const double diff = s[f] - (a[f] + t * (b[f] - a[f]));
        r2 += diff * diff;
    }
    return std::sqrt(r2);
}

Outcome criterion3(SharedState& st) {
    if (!st.ready) return {false, "skipped: criterion 1 did not complete"};
    const Dataset& train = st.train;
    const SmoteConfig sm{5, subseed(kProtocolSeed, 3)};
    const Dataset bal = smote_resample(train, sm);

    const auto counts = bal.class_counts();
    const std::size_t majority = *std::max_element(counts.begin(), counts.end());
    bool counts_ok = true;
    for (auto c : counts) counts_ok = counts_ok && c == majority;

    // Parent a is recorded in the synthetic id ("<parent>#sN"); parent b is
    // one of a's k nearest same-class neighbours. Residual against the best
    // of those segments must vanish.
    std::map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < train.size(); ++i) row_of[train.ids[i]] = i;
    std::vector<std::vector<std::size_t>> members(train.num_classes());
    for (std::size_t i = 0; i < train.size(); ++i)
        members[static_cast<std::size_t>(train.labels[i])].push_back(i);
    std::vector<std::vector<std::vector<std::size_t>>> nn(train.num_classes());
    std::vector<std::map<std::size_t, std::size_t>> local(train.num_classes());
    for (std::size_t c = 0; c < train.num_classes(); ++c) {
        const std::size_t k = std::min<std::size_t>(5, members[c].size() - 1);
        nn[c] = detail::knn_table(train.features, members[c], k);
        for (std::size_t m = 0; m < members[c].size(); ++m) local[c][members[c][m]] = m;
    }

    double worst_residual = 0;
    std::size_t synthetic_rows = 0;
    for (std::size_t i = train.size(); i < bal.size(); ++i) {
        synthetic_rows++;
        const std::size_t c = static_cast<std::size_t>(bal.labels[i]);
        const std::string parent_id = bal.ids[i].substr(0, bal.ids[i].find('#'));
        const std::size_t a = row_of.at(parent_id);
        const std::size_t a_local = local[c].at(a);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t b_local : nn[c][a_local])
            best = std::min(best, segment_residual(bal.features.row(i), train.features.row(a),
                                                   train.features.row(members[c][b_local]),
                                                   train.dim()));
        worst_residual = std::max(worst_residual, best);
    }
    const bool residual_ok = worst_residual <= 1e-9;

    // Provenance audit: CV validation folds and the test split hold original
    // rows only, and evaluate() refuses resampled data outright.
    bool eval_clean = !st.test.any_synthetic();
    for (const CvFold& fold : make_cv_folds(train, sm, subseed(kProtocolSeed, 6)))
        eval_clean = eval_clean && !fold.valid.any_synthetic() && fold.train.any_synthetic();
    bool guard_ok = false;
    try {
        evaluate(st.runs[ModelFamily::Svm].model, bal);
    } catch (const Error& e) {
        guard_ok = e.code() == "eval_synthetic_rows";
    }

    std::ostringstream os;
    os << synthetic_rows << " synthetic rows, counts " << (counts_ok ? "balanced" : "UNBALANCED")
       << ", worst residual " << fmt_double(worst_residual) << " (<= 1e-9), eval audit "
       << (eval_clean && guard_ok ? "clean" : "VIOLATED");
    return {counts_ok && residual_ok && eval_clean && guard_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 4: SMO vs a projected-gradient QP oracle on 25 random binary
// instances; dual gap <= 1e-6, KKT violation <= 1e-3 at every point.

struct QpOracle {
    std::vector<double> alpha;
    double objective = 0.0;
};

QpOracle qp_solve(const Matrix& x, const std::vector<int>& y, double c, double gamma) {
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
            const double lam = (lo + hi) / 2;
            double s = 0;
            for (std::size_t i = 0; i < n; ++i)
                s += y[i] * std::clamp(v[i] - lam * y[i], 0.0, c);
            (s > 0 ? lo : hi) = lam;
        }
        const double lam = (lo + hi) / 2;
        for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] - lam * y[i], 0.0, c);
    };

    double lip = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
        lip = std::max(lip, row);
    }

    std::vector<double> a(n, 0.0), g(n), trial(n);
    project(a);
    for (std::size_t it = 0; it < 300000; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) s += q[i * n + j] * a[j];
            g[i] = s - 1.0;
        }
        for (std::size_t i = 0; i < n; ++i) trial[i] = a[i] - g[i] / lip;
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

double kkt_violation(const Matrix& x, const std::vector<int>& y, const BinarySvmSolution& sol,
                     double c, double gamma) {
    double worst = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double f = sol.bias;
        for (std::size_t j = 0; j < x.rows(); ++j)
            if (sol.alpha[j] > 0)
                f += sol.alpha[j] * y[j] * rbf_kernel(x.row(j), x.row(i), x.cols(), gamma);
        const double yf = y[i] * f;
        const double a = sol.alpha[i];
        if (a <= 0) worst = std::max(worst, 1.0 - yf);
        else if (a >= c) worst = std::max(worst, yf - 1.0);
        else worst = std::max(worst, std::abs(yf - 1.0));
    }
    return worst;
}

Outcome criterion4() {
    double worst_gap = 0, worst_kkt = 0;
    bool pass = true;
    for (int inst = 0; inst < 25; ++inst) {
        Rng rng(5000 + static_cast<std::uint64_t>(inst));
        const std::size_t n = 10 + rng.below(51);  // <= 60
        const std::size_t d = 2 + rng.below(7);    // <= 8
        const double sep = rng.uniform(1.0, 5.0);
        Matrix x(n, d);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < n / 2 ? 1 : -1;
            for (std::size_t f = 0; f < d; ++f)
                x.at(i, f) = (y[i] == 1 && f == 0 ? sep : 0.0) + rng.gaussian();
        }
        RbfSvmConfig cfg;
        cfg.c = std::vector<double>{1, 5, 10}[rng.below(3)];
        cfg.gamma = std::vector<double>{0.05, 0.2, 0.5}[rng.below(3)];
        cfg.tol = 1e-6;  // tight stop; the criterion compares optima
        const BinarySvmSolution sol = smo_solve(x, y, cfg);
        const QpOracle oracle = qp_solve(x, y, cfg.c, cfg.gamma);
        const double gap = std::abs(dual_objective(x, y, sol.alpha, cfg.gamma) - oracle.objective);
        const double kkt = kkt_violation(x, y, sol, cfg.c, cfg.gamma);
        worst_gap = std::max(worst_gap, gap);
        worst_kkt = std::max(worst_kkt, kkt);
        pass = pass && gap <= 1e-6 && kkt <= 1e-3;
    }
    std::ostringstream os;
    os << "25 instances: worst dual gap " << fmt_double(worst_gap)
       << " (<= 1e-6), worst KKT violation " << fmt_double(worst_kkt) << " (<= 1e-3)";
    return {pass, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 5: GBT loss monotone over 100 rounds; depth-<=2 trees match an
// exhaustive-split oracle; softmax gradients/hessians match finite
// differences.

struct OracleNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double weight = 0.0;
    std::unique_ptr<OracleNode> left, right;
};

std::unique_ptr<OracleNode> oracle_build(const Matrix& x, const std::vector<std::size_t>& idx,
                                         const std::vector<double>& g,
                                         const std::vector<double>& h, const GbtConfig& cfg,
                                         std::size_t depth) {
    auto node = std::make_unique<OracleNode>();
    double gsum = 0, hsum = 0;
    for (auto i : idx) {
        gsum += g[i];
        hsum += h[i];
    }
    double best_gain = 0;
    int best_f = -1;
    double best_t = 0;
    if (depth < cfg.max_depth && idx.size() >= 2) {
        for (std::size_t f = 0; f < x.cols(); ++f) {
            std::vector<double> vals;
            for (auto i : idx) vals.push_back(x.at(i, f));
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            for (std::size_t v = 0; v + 1 < vals.size(); ++v) {
                const double t = (vals[v] + vals[v + 1]) / 2.0;
                double gl = 0, hl = 0, gr = 0, hr = 0;
                for (auto i : idx) {
                    if (x.at(i, f) < t) {
                        gl += g[i];
                        hl += h[i];
                    } else {
                        gr += g[i];
                        hr += h[i];
                    }
                }
                if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
                const double gain =
                    0.5 * (gl * gl / (hl + cfg.reg_lambda) + gr * gr / (hr + cfg.reg_lambda) -
                           gsum * gsum / (hsum + cfg.reg_lambda));
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    best_t = t;
                }
            }
        }
    }
    if (best_f < 0 || !(best_gain > 0)) {
        node->weight = -gsum / (hsum + cfg.reg_lambda);
        return node;
    }
    node->leaf = false;
    node->feature = best_f;
    node->threshold = best_t;
    std::vector<std::size_t> li, ri;
    for (auto i : idx) (x.at(i, best_f) < best_t ? li : ri).push_back(i);
    node->left = oracle_build(x, li, g, h, cfg, depth + 1);
    node->right = oracle_build(x, ri, g, h, cfg, depth + 1);
    return node;
}

bool trees_match(const GbtTree& tree, std::size_t id, const OracleNode& oracle,
                 double& worst_weight_err) {
    const GbtNode& n = tree.nodes[id];
    if (oracle.leaf) {
        if (n.feature != -1) return false;
        worst_weight_err = std::max(worst_weight_err, std::abs(n.weight - oracle.weight));
        return true;
    }
    if (n.feature != oracle.feature || n.threshold != oracle.threshold) return false;
    return trees_match(tree, static_cast<std::size_t>(n.left), *oracle.left,
                       worst_weight_err) &&
           trees_match(tree, static_cast<std::size_t>(n.right), *oracle.right,
                       worst_weight_err);
}

double softmax_row_loss(const std::vector<double>& logits, int label) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double z = 0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[label];
}

Outcome criterion5(SharedState& st) {
    if (!st.ready) return {false, "skipped: criterion 1 did not complete"};

    GbtConfig loss_cfg;
    loss_cfg.eta = 0.3;
    loss_cfg.rounds = 100;
    const GbtModel traced = gbt_fit(st.train, loss_cfg);
    // Initial loss plus one entry per round.
    bool monotone = traced.train_loss.size() == loss_cfg.rounds + 1;
    for (std::size_t r = 0; r + 1 < traced.train_loss.size(); ++r)
        monotone = monotone && traced.train_loss[r + 1] <= traced.train_loss[r] + 1e-12;

    bool oracle_ok = true;
    double worst_weight = 0;
    for (int inst = 0; inst < 20; ++inst) {
        Rng rng(4000 + static_cast<std::uint64_t>(inst));
        const std::size_t n = 50, d = 4;
        Matrix x(n, d);
        std::vector<double> g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < d; ++f) x.at(i, f) = rng.uniform(-5, 5);
            g[i] = rng.uniform(-1, 1);
            h[i] = rng.uniform(0.01, 0.25);
        }
        GbtConfig cfg;
        cfg.max_depth = 1 + static_cast<std::size_t>(inst % 2);  // <= 2
        cfg.min_child_weight = 0.1;
        const GbtTree tree = build_tree(x, g, h, cfg);
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        const auto oracle = oracle_build(x, all, g, h, cfg, 0);
        oracle_ok = oracle_ok && trees_match(tree, 0, *oracle, worst_weight);
    }
    oracle_ok = oracle_ok && worst_weight <= 1e-10;

    Rng rng(7);
    const std::size_t n = 40, k = 5;
    Matrix logits(n, k);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) logits.at(i, c) = rng.uniform(-2, 2);
        y[i] = static_cast<int>(rng.below(k));
    }
    const auto [g, h] = softmax_grad_hess(logits, y);
    double worst_fd = 0;
    const double eps = 1e-4;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) {
            auto row = logits.row_copy(i);
            auto rp = row, rm = row;
            rp[c] += eps;
            rm[c] -= eps;
            const double l0 = softmax_row_loss(row, y[i]);
            const double fd_g = (softmax_row_loss(rp, y[i]) - softmax_row_loss(rm, y[i])) /
                                (2 * eps);
            const double fd_h = (softmax_row_loss(rp, y[i]) - 2 * l0 +
                                 softmax_row_loss(rm, y[i])) /
                                (eps * eps);
            worst_fd = std::max({worst_fd, std::abs(g.at(i, c) - fd_g),
                                 std::abs(h.at(i, c) - fd_h)});
        }
    const bool fd_ok = worst_fd <= 1e-6;

    std::ostringstream os;
    os << "loss trace " << (monotone ? "non-increasing" : "INCREASED")
       << " (100 rounds, eta 0.3); 20 oracle instances "
       << (oracle_ok ? "identical" : "DIVERGED") << ", worst leaf err "
       << fmt_double(worst_weight) << " (<= 1e-10); grad/hess FD err " << fmt_double(worst_fd)
       << " (<= 1e-6)";
    return {monotone && oracle_ok && fd_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 6: FFN analytic gradients vs central differences on 20 random
// small networks; identical inputs give bit-identical models.

double ffn_loss_only(const FfnModel& m, const Matrix& x, const std::vector<int>& y,
                     const std::vector<std::size_t>& rows) {
    FfnGradients g;
    return ffn_loss_and_grad(m, x, y, rows, g);
}

// Minimum |pre-activation| across hidden layers; a central difference is only
// a valid oracle when no ReLU input sits within the probe step of its kink.
double kink_margin(const FfnModel& m, const Matrix& x, Activation act) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<double> cur = x.row_copy(i);
        for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
            const auto& w = m.layers[l].w;
            std::vector<double> z(w.rows());
            for (std::size_t r = 0; r < w.rows(); ++r) {
                double s = m.layers[l].b[r];
                for (std::size_t c = 0; c < w.cols(); ++c) s += w.at(r, c) * cur[c];
                z[r] = s;
                margin = std::min(margin, std::abs(s));
            }
            for (double& v : z) v = act == Activation::Tanh ? std::tanh(v) : std::max(0.0, v);
            cur = z;
        }
    }
    return margin;
}

Outcome criterion6() {
    double worst_rel = 0;
    bool pass = true;
    for (int net = 0; net < 20; ++net) {
        const std::size_t depth = 2 + static_cast<std::size_t>(net % 2);
        const Activation act = (net / 2) % 2 == 0 ? Activation::Tanh : Activation::ReLU;
        Rng data_rng = Rng(777).fork(static_cast<std::uint64_t>(net));
        const std::size_t d = 3 + data_rng.below(4);
        const std::size_t k = 2 + data_rng.below(3);
        const std::size_t h = 4 + data_rng.below(5);
        const std::size_t n = 8;
        std::vector<std::vector<double>> feats(n, std::vector<double>(d));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (double& v : feats[i]) v = data_rng.uniform(-1.5, 1.5);
            y[i] = static_cast<int>(data_rng.below(k));
        }
        const Matrix x = Matrix::from_rows(feats);
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;

        std::vector<std::string> names;
        for (std::size_t i = 0; i < k; ++i) names.push_back("C" + std::to_string(i));
        FfnConfig cfg;
        cfg.hidden_units = h;
        cfg.hidden_layers = depth;
        cfg.activation = act;

        FfnModel m;
        bool found = false;
        for (std::uint64_t s = 0; s < 500 && !found; ++s) {
            cfg.seed = 600 + 1000 * static_cast<std::uint64_t>(net) + s;
            m = ffn_init(d, Vocabulary(names), cfg);
            found = act == Activation::Tanh || kink_margin(m, x, act) > 1e-3;
        }
        if (!found) {
            pass = false;
            continue;
        }

        FfnGradients g;
        ffn_loss_and_grad(m, x, y, rows, g);
        const double eps = 1e-5;
        auto check_entry = [&](double& param, double analytic) {
            const double orig = param;
            param = orig + eps;
            const double up = ffn_loss_only(m, x, y, rows);
            param = orig - eps;
            const double dn = ffn_loss_only(m, x, y, rows);
            param = orig;
            const double fd = (up - dn) / (2.0 * eps);
            const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
            worst_rel = std::max(worst_rel, std::abs(analytic - fd) / denom);
        };
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            auto& w = m.layers[l].w;
            for (std::size_t r = 0; r < w.rows(); ++r)
                for (std::size_t c = 0; c < w.cols(); ++c) check_entry(w.at(r, c), g.dw[l].at(r, c));
            for (std::size_t r = 0; r < m.layers[l].b.size(); ++r)
                check_entry(m.layers[l].b[r], g.db[l][r]);
        }
    }
    pass = pass && worst_rel <= 1e-4;

    // Bit-identical retraining.
    Rng rng(88);
    Dataset d = gaussian_blobs(Matrix::from_rows({{0, 0, 0}, {4, 0, 0}, {0, 4, 0}}),
                               {0.8, 0.8, 0.8}, {20, 20, 20}, Vocabulary({"a", "b", "c"}), rng);
    FfnConfig cfg;
    cfg.hidden_units = 16;
    cfg.epochs = 12;
    cfg.seed = 9;
    const FfnModel m1 = ffn_fit(d, cfg);
    const FfnModel m2 = ffn_fit(d, cfg);
    bool identical = m1.layers.size() == m2.layers.size();
    for (std::size_t l = 0; identical && l < m1.layers.size(); ++l)
        identical = m1.layers[l].w == m2.layers[l].w && m1.layers[l].b == m2.layers[l].b;

    std::ostringstream os;
    os << "20 networks: worst FD rel err " << fmt_double(worst_rel)
       << " (<= 1e-4); retrain " << (identical ? "bit-identical" : "DIVERGED");
    return {pass && identical, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 7: metrics match brute-force counting oracles exactly.

Outcome criterion7() {
    const std::size_t K = 5;
    Rng rng(31);
    bool pass = true;
    for (int trial = 0; trial < 1000 && pass; ++trial) {
        const std::size_t n = 1 + rng.below(400);
        std::vector<int> yt(n), yp(n);
        for (std::size_t i = 0; i < n; ++i) {
            yt[i] = static_cast<int>(rng.below(K));
            yp[i] = static_cast<int>(rng.below(K));
        }
        const MetricsReport r = compute_metrics(yt, yp, K);

        std::int64_t correct = 0;
        double f1_sum = 0, rec_sum = 0;
        std::vector<std::vector<std::int64_t>> conf(K, std::vector<std::int64_t>(K, 0));
        for (std::size_t i = 0; i < n; ++i) {
            conf[static_cast<std::size_t>(yt[i])][static_cast<std::size_t>(yp[i])]++;
            if (yt[i] == yp[i]) correct++;
        }
        for (std::size_t c = 0; c < K; ++c) {
            std::int64_t tp = 0, fp = 0, fn = 0, support = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool is_t = yt[i] == static_cast<int>(c);
                const bool is_p = yp[i] == static_cast<int>(c);
                support += is_t;
                tp += is_t && is_p;
                fp += !is_t && is_p;
                fn += is_t && !is_p;
            }
            const double prec = tp + fp ? double(tp) / double(tp + fp) : 0.0;
            const double rec = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            pass = pass && r.per_class[c].support == support &&
                   r.per_class[c].precision == prec && r.per_class[c].recall == rec &&
                   r.per_class[c].f1 == f1;
            for (std::size_t p = 0; p < K; ++p) pass = pass && r.confusion[c][p] == conf[c][p];
            f1_sum += f1;
            rec_sum += rec;
        }
        pass = pass && r.accuracy == double(correct) / double(n) &&
               r.macro_f1 == f1_sum / double(K) && r.macro_recall == rec_sum / double(K);
    }
    return {pass, pass ? "1000 random sets (K=5): exact match" : "oracle mismatch"};
}

// ---------------------------------------------------------------------------
// Criterion 8: convolution length/agreement, exact RIR scaling, WAV
// round-trip bound.

Outcome criterion8() {
    Rng rng(8001);
    bool len_ok = true, agree_ok = true, scale_ok = true;
    double worst_agree = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(400);
        const std::size_t m = 1 + rng.below(120);
        std::vector<double> x(n), h(m);
        for (double& v : x) v = rng.uniform(-1, 1);
        for (double& v : h) v = rng.uniform(-1, 1);
        const auto direct = convolve_direct(x, h);
        const auto fast = convolve_fft(x, h);
        len_ok = len_ok && direct.size() == n + m - 1 && fast.size() == n + m - 1;
        for (std::size_t i = 0; i < direct.size(); ++i)
            worst_agree = std::max(worst_agree, std::abs(direct[i] - fast[i]));
        if (trial < 20) {
            const Rir doubled = scale_rir(Rir{h, 16000}, 2.0);
            const auto conv2 = convolve_direct(x, doubled.taps);
            for (std::size_t i = 0; i < direct.size(); ++i)
                scale_ok = scale_ok && conv2[i] == 2.0 * direct[i];
        }
    }
    agree_ok = worst_agree <= 1e-6;

    Waveform w;
    w.sample_rate = 16000;
    w.samples.resize(2000);
    for (double& v : w.samples) v = rng.uniform(-0.999, 0.999);
    const std::string path = (fs::temp_directory_path() / "pathovox_accept_rt.wav").string();
    write_wav(w, path);
    const Waveform back = read_wav(path);
    fs::remove(path);
    double worst_rt = 0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        worst_rt = std::max(worst_rt, std::abs(w.samples[i] - back.samples[i]));
    const bool rt_ok = back.samples.size() == w.samples.size() && worst_rt <= 1.0 / 32768.0;

    std::ostringstream os;
    os << "200 fuzz cases: lengths " << (len_ok ? "n+m-1" : "WRONG") << ", direct-vs-fft err "
       << fmt_double(worst_agree) << " (<= 1e-6), x2 RIR scaling "
       << (scale_ok ? "exact" : "INEXACT") << ", WAV round-trip err " << fmt_double(worst_rt)
       << " (<= 1/32768)";
    return {len_ok && agree_ok && scale_ok && rt_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 9: t-SNE conditionals hit the target perplexity, KL decreases,
// two clusters separate, runs are deterministic.

Outcome criterion9() {
    Rng rng(303);
    Matrix means(2, 10);
    means.at(1, 0) = 12.0;
    Dataset d = gaussian_blobs(means, {1.0, 1.0}, {80, 80}, Vocabulary({"A", "B"}), rng);

    const Matrix d2 = pairwise_sqdist(d.features);
    Matrix cond;
    conditional_p(d2, 30.0, &cond);
    double worst_perp = 0;
    for (std::size_t i = 0; i < cond.rows(); ++i) {
        double entropy = 0;
        for (std::size_t j = 0; j < cond.cols(); ++j)
            if (cond.at(i, j) > 0) entropy -= cond.at(i, j) * std::log2(cond.at(i, j));
        worst_perp = std::max(worst_perp, std::abs(std::exp2(entropy) - 30.0));
    }
    const bool perp_ok = worst_perp <= 1e-3;

    TsneConfig cfg;
    cfg.perplexity = 30;
    cfg.iterations = 500;
    cfg.seed = 11;
    const TsneEmbedding emb = run_tsne(d, cfg, worker_count());
    double kl50 = 0, kl_final = emb.kl_trace.back().second;
    for (const auto& [iter, kl] : emb.kl_trace)
        if (iter == 50) kl50 = kl;
    const bool kl_ok = kl_final < kl50;

    // Separation: the gap between cluster centroids must dominate the
    // spread around them.
    double cx[2] = {0, 0}, cy[2] = {0, 0};
    for (std::size_t i = 0; i < emb.coords.rows(); ++i) {
        cx[d.labels[i]] += emb.coords.at(i, 0) / 80.0;
        cy[d.labels[i]] += emb.coords.at(i, 1) / 80.0;
    }
    double radius[2] = {0, 0};
    for (std::size_t i = 0; i < emb.coords.rows(); ++i) {
        const int c = d.labels[i];
        radius[c] = std::max(radius[c], std::hypot(emb.coords.at(i, 0) - cx[c],
                                                   emb.coords.at(i, 1) - cy[c]));
    }
    const double gap = std::hypot(cx[0] - cx[1], cy[0] - cy[1]);
    const bool sep_ok = gap > radius[0] + radius[1];

    const TsneEmbedding again = run_tsne(d, cfg, worker_count());
    const bool det_ok = emb.coords == again.coords;

    std::ostringstream os;
    os << "worst |perplexity-30| " << fmt_double(worst_perp) << " (<= 1e-3); KL "
       << fmt(kl_final, 4) << " < " << fmt(kl50, 4) << " (iter 50): " << (kl_ok ? "yes" : "NO")
       << "; centroid gap " << fmt(gap, 1) << " > radii sum " << fmt(radius[0] + radius[1], 1)
       << ": " << (sep_ok ? "yes" : "NO") << "; rerun " << (det_ok ? "bit-identical" : "DIVERGED");
    return {perp_ok && kl_ok && sep_ok && det_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 10: layer sweep finds the scripted easiest layer; mean/std match
// a two-pass oracle to 1e-12; report columns mirror the result table.

Outcome criterion10() {
    std::vector<Dataset> per_layer;
    Rng root(606);
    for (int layer = 1; layer <= 12; ++layer) {
        const double sep = layer == 7 ? 8.0 : 2.0 + 0.1 * layer;
        Matrix means(3, 6);
        means.at(1, 0) = sep;
        means.at(2, 1) = sep;
        Rng rng = root.fork(static_cast<std::uint64_t>(layer));
        Dataset d = gaussian_blobs(means, {1.0, 1.0, 1.0}, {20, 24, 16},
                                   Vocabulary({"a", "b", "c"}), rng);
        d.layer = layer;
        per_layer.push_back(std::move(d));
    }

    GridSpec grid = GridSpec::defaults(ModelFamily::Svm);
    grid.svm_gamma = {1e-3, 1e-2};
    grid.svm_c = {10.0};
    const LayerSweepReport sweep =
        layer_sweep(per_layer, grid, SmoteConfig{3, 0}, 0.25, 424242, worker_count());

    const bool best_ok = sweep.best_layer == 7;

    double mean = 0;
    for (const auto& l : sweep.layers) mean += l.report.macro_f1;
    mean /= double(sweep.layers.size());
    double var = 0;
    for (const auto& l : sweep.layers)
        var += (l.report.macro_f1 - mean) * (l.report.macro_f1 - mean);
    const double stdev = std::sqrt(var / double(sweep.layers.size() - 1));
    const bool stats_ok =
        std::abs(mean - sweep.f1_mean) <= 1e-12 && std::abs(stdev - sweep.f1_std) <= 1e-12;

    const std::string table = sweep_text(sweep, "SVM");
    const bool cols_ok = table.find("Layer (best)") != std::string::npos &&
                         table.find("Accuracy") != std::string::npos &&
                         table.find("F1 unw. avg") != std::string::npos &&
                         table.find("Avg±Std (all layers)") != std::string::npos;

    std::ostringstream os;
    os << "best layer " << sweep.best_layer << " (scripted 7); mean/std vs two-pass oracle |d| "
       << fmt_double(std::max(std::abs(mean - sweep.f1_mean), std::abs(stdev - sweep.f1_std)))
       << " (<= 1e-12); columns " << (cols_ok ? "mirrored" : "MISSING");
    return {best_ok && stats_ok && cols_ok, os.str()};
}

// ---------------------------------------------------------------------------
// Criterion 11: every CLI command replayed from its run_meta.json reproduces
// its tables byte-identically; a missing manifest exits with code 2.

int run_cli(const std::string& exe, const std::string& args) {
    const std::string cmd = exe + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status < 0 ? -1 : (status >> 8) & 0xff;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    return fs::exists(a) && fs::exists(b) && read_text_file(a.string()) == read_text_file(b.string());
}

Outcome criterion11(const std::string& cli) {
    if (!fs::exists(cli)) return {false, "CLI binary not found: " + cli};
    const fs::path work = fs::temp_directory_path() / "pathovox_acceptance";
    fs::remove_all(work);
    fs::create_directories(work / "emb");
    fs::create_directories(work / "wav");
    fs::create_directories(work / "rir");

    // Tiny five-class embedding corpus, layers 1 and 2 on disk.
    Rng rng(515);
    Matrix means(5, 8);
    for (std::size_t c = 0; c < 5; ++c) means.at(c, c) = 6.0;
    Dataset d = gaussian_blobs(means, {1, 1, 1, 1, 1}, {6, 10, 8, 38, 38},
                               Vocabulary({"CTL", "CLP", "PD", "OSCC", "LAR"}), rng);
    std::ostringstream manifest;
    manifest << "id,label,corpus,emb_template\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const std::string id = "utt" + std::to_string(i);
        for (int layer = 1; layer <= 2; ++layer) {
            Matrix frames(3, 8);
            for (std::size_t t = 0; t < 3; ++t)
                for (std::size_t f = 0; f < 8; ++f)
                    frames.at(t, f) = d.features.at(i, f) + (double(t) - 1.0) * 0.01;
            write_embedding((work / "emb" / (id + ".l" + std::to_string(layer) + ".emb1")).string(),
                            frames);
        }
        manifest << id << ',' << d.vocab.name(static_cast<std::size_t>(d.labels[i]))
                 << ",SYN,emb/" << id << ".l{layer}.emb1\n";
    }
    write_text_file((work / "manifest.csv").string(), manifest.str());

    // Tiny audio corpus + RIR bank for the augment replay.
    std::ostringstream audio_manifest;
    audio_manifest << "id,label,corpus,emb_template\n";
    for (int i = 0; i < 4; ++i) {
        Waveform w;
        w.sample_rate = 16000;
        w.samples.resize(400);
        for (std::size_t t = 0; t < w.samples.size(); ++t)
            w.samples[t] = 0.4 * std::sin(0.02 * double(t) * (i + 1));
        write_wav(w, (work / "wav" / ("spk" + std::to_string(i) + ".wav")).string());
        audio_manifest << "spk" << i << ",CTL,SYN,emb/spk" << i << ".l{layer}.emb1\n";
    }
    for (int r = 0; r < 2; ++r) {
        Waveform rir;
        rir.sample_rate = 16000;
        rir.samples.resize(24);
        for (std::size_t t = 0; t < rir.samples.size(); ++t)
            rir.samples[t] = (r ? 0.3 : 0.45) * std::exp(-0.3 * double(t));
        write_wav(rir, (work / "rir" / ("room" + std::to_string(r) + ".wav")).string());
    }
    write_text_file((work / "audio_manifest.csv").string(), audio_manifest.str());

    const std::string mani = (work / "manifest.csv").string();
    auto out = [&](const std::string& name) { return (work / name).string(); };
    auto replayed = [&](const std::string& a, const std::string& b) {
        return run_cli(cli, "replay --meta " + out(a) + "/run_meta.json --out " + out(b)) == 0;
    };

    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };

    expect(run_cli(cli, "train --manifest " + mani +
                            " --model svm --layer 1 --seed 5 --svm-gamma 0.01 --svm-c 10"
                            " --out " + out("t1")) == 0 &&
               replayed("t1", "t2"),
           "train run");
    for (const char* f : {"cv_table.csv", "metrics.csv", "confusion.csv", "report.txt",
                          "model.pvm"})
        expect(same_bytes(fs::path(out("t1")) / f, fs::path(out("t2")) / f),
               std::string("train ") + f);

    expect(run_cli(cli, "evaluate --model-file " + out("t1") + "/model.pvm --manifest " + mani +
                            " --layer 1 --out " + out("e1")) == 0 &&
               replayed("e1", "e2"),
           "evaluate run");
    for (const char* f : {"metrics.csv", "confusion.csv", "report.txt"})
        expect(same_bytes(fs::path(out("e1")) / f, fs::path(out("e2")) / f),
               std::string("evaluate ") + f);

    expect(run_cli(cli, "sweep-layers --manifest " + mani +
                            " --model svm --first-layer 1 --last-layer 2 --seed 9"
                            " --svm-gamma 0.01 --svm-c 10 --out " + out("s1")) == 0 &&
               replayed("s1", "s2"),
           "sweep run");
    for (const char* f : {"sweep.csv", "sweep.txt"})
        expect(same_bytes(fs::path(out("s1")) / f, fs::path(out("s2")) / f),
               std::string("sweep ") + f);

    expect(run_cli(cli, "tsne --manifest " + mani +
                            " --layer 1 --perplexity 10 --iters 300 --seed 7 --out " +
                            out("v1")) == 0 &&
               replayed("v1", "v2"),
           "tsne run");
    for (const char* f : {"tsne.csv", "kl_trace.csv"})
        expect(same_bytes(fs::path(out("v1")) / f, fs::path(out("v2")) / f),
               std::string("tsne ") + f);

    expect(run_cli(cli, "predict-dump --model-file " + out("t1") + "/model.pvm --manifest " +
                            mani + " --layer 1 --out " + out("p1")) == 0 &&
               replayed("p1", "p2"),
           "predict-dump run");
    expect(same_bytes(fs::path(out("p1")) / "predictions.csv",
                      fs::path(out("p2")) / "predictions.csv"),
           "predict-dump predictions.csv");

    expect(run_cli(cli, "augment --manifest " + out("audio_manifest.csv") + " --audio-dir " +
                            out("wav") + " --rir-dir " + out("rir") + " --seed 3 --out " +
                            out("g1")) == 0 &&
               replayed("g1", "g2"),
           "augment run");
    for (const char* f : {"manifest.csv", "rir_choices.csv", "spk0.wav", "spk3.wav"})
        expect(same_bytes(fs::path(out("g1")) / f, fs::path(out("g2")) / f),
               std::string("augment ") + f);

    expect(run_cli(cli, "train --manifest " + out("absent.csv") +
                            " --model svm --layer 1 --seed 1 --out " + out("x")) == 2,
           "missing manifest exit code 2");

    fs::remove_all(work);
    if (failures.empty())
        return {true, "6 commands replayed byte-identically; missing manifest exits 2"};
    std::ostringstream os;
    os << failures.size() << " mismatch(es): ";
    for (std::size_t i = 0; i < failures.size() && i < 4; ++i)
        os << (i ? ", " : "") << failures[i];
    return {false, os.str()};
}

}  // namespace

int main(int, char** argv) {
    const std::string cli =
        (fs::path(argv[0]).parent_path() / "pathovox").string();

    SharedState st;
    std::vector<std::pair<int, Outcome>> results;
    auto run = [&](int idx, auto&& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results.emplace_back(idx, o);
        std::printf("criterion %2d: %s  %s\n", idx, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    };

    run(1, [&] { return criterion1(st); });
    run(2, [&] { return criterion2(st); });
    run(3, [&] { return criterion3(st); });
    run(4, [] { return criterion4(); });
    run(5, [&] { return criterion5(st); });
    run(6, [] { return criterion6(); });
    run(7, [] { return criterion7(); });
    run(8, [] { return criterion8(); });
    run(9, [] { return criterion9(); });
    run(10, [] { return criterion10(); });
    run(11, [&] { return criterion11(cli); });

    int failed = 0;
    for (const auto& [idx, o] : results) failed += o.pass ? 0 : 1;
    if (failed) std::printf("%d of 11 criteria FAILED\n", failed);
    else std::printf("all 11 criteria passed\n");
    return failed ? 1 : 0;
}
