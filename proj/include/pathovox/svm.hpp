#ifndef PATHOVOX_SVM_HPP
#define PATHOVOX_SVM_HPP

// Soft-margin RBF SVM trained by SMO with second-order working-set selection
// (the Fan/Chen/Lin rule), decoded one-vs-one. Each binary subproblem
//
//   min_a  1/2 a'Qa - sum(a)   s.t.  0 <= a_i <= C,  y'a = 0,
//
// with Q_ij = y_i y_j K(x_i, x_j), is solved to a duality gap of `tol`; the
// full Gram matrix is precomputed since subproblems here are a few hundred
// rows at most.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct RbfSvmConfig {
    double c = 1.0;
    double gamma = 0.1;
    double tol = 1e-3;
    std::size_t max_iter = 1000000;  // cap on alpha-pair updates
    bool standardize = false;

    void validate() const {
        if (!(c > 0)) fail_config("svm_bad_c", "C must be positive");
        if (!(gamma > 0)) fail_config("svm_bad_gamma", "gamma must be positive");
        if (!(tol > 0)) fail_config("svm_bad_tol", "tol must be positive");
        if (max_iter == 0) fail_config("svm_bad_cap", "max_iter must be positive");
    }
};

inline double rbf_kernel(const double* x, const double* y, std::size_t dim, double gamma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double d = x[i] - y[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

inline double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y, double gamma) {
    if (x.size() != y.size()) fail_data("svm_dim_mismatch", "rbf_kernel dimension mismatch");
    if (!(gamma > 0)) fail_config("svm_bad_gamma", "gamma must be positive");
    return rbf_kernel(x.data(), y.data(), x.size(), gamma);
}

// Dense SMO solution over every training row of one binary subproblem.
struct BinarySvmSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

// y must be +1/-1. Deterministic: no randomness, selection ties resolved by
// the lowest index through strict comparisons in the scan order.
inline BinarySvmSolution smo_solve(const Matrix& x, const std::vector<int>& y,
                                   const RbfSvmConfig& cfg) {
    cfg.validate();
    const std::size_t n = x.rows();
    if (n < 2 || y.size() != n) fail_data("svm_bad_problem", "binary SVM needs >= 2 labeled rows");
    bool pos = false, neg = false;
    for (int v : y) {
        if (v == 1) pos = true;
        else if (v == -1) neg = true;
        else fail_data("svm_bad_problem", "binary labels must be +1/-1");
    }
    if (!pos || !neg) fail_data("svm_bad_problem", "both classes must be present");

    // Gram matrix; Q_ij = y_i y_j K_ij read off on the fly.
    std::vector<double> k(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = rbf_kernel(x.row(i), x.row(j), x.cols(), cfg.gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    const double c = cfg.c;
    const double tau = 1e-12;
    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    auto in_up = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] < c) || (y[t] == -1 && alpha[t] > 0);
    };
    auto in_low = [&](std::size_t t) {
        return (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < c);
    };

    BinarySvmSolution sol;
    std::size_t iter = 0;
    while (iter < cfg.max_iter) {
        // i: the most violating index on the "up" side.
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t)
            if (in_up(t) && -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        // Stopping gap and second-order choice of j.
        double gmin = std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        if (i < n) {
            const double* ki = &k[i * n];
            for (std::size_t t = 0; t < n; ++t) {
                if (!in_low(t)) continue;
                double mt = -y[t] * grad[t];
                if (mt < gmin) gmin = mt;
                double b = gmax - mt;
                if (b > 0) {
                    double a = 2.0 - 2.0 * ki[t];  // K_ii + K_tt - 2 K_it
                    if (a <= 0) a = tau;
                    double obj = -(b * b) / a;
                    if (obj < best_obj) {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        if (i == n || j == n || gmax - gmin <= cfg.tol) {
            sol.converged = true;
            break;
        }
        ++iter;

        const double* ki = &k[i * n];
        const double* kj = &k[j * n];
        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = 2.0 + 2.0 * ki[j];
            if (quad <= 0) quad = tau;
            double delta = (-grad[i] - grad[j]) / quad;
            double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
            } else {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
            }
        } else {
            double quad = 2.0 - 2.0 * ki[j];
            if (quad <= 0) quad = tau;
            double delta = (grad[i] - grad[j]) / quad;
            double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
            }
            if (sum > c) {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }
        const double di = alpha[i] - old_ai, dj = alpha[j] - old_aj;
        const double yi = y[i], yj = y[j];
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
    }
    sol.iterations = iter;

    // Bias from the free support vectors, midpoint of the bounds otherwise.
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0 && alpha[t] < c) {
            sum_free += -y[t] * grad[t];
            ++n_free;
        }
    if (n_free > 0) {
        sol.bias = sum_free / static_cast<double>(n_free);
    } else {
        double up = -std::numeric_limits<double>::infinity();
        double low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(t)) up = std::max(up, -static_cast<double>(y[t]) * grad[t]);
            if (in_low(t)) low = std::min(low, -static_cast<double>(y[t]) * grad[t]);
        }
        sol.bias = (up + low) / 2.0;
    }
    sol.alpha = std::move(alpha);
    return sol;
}

// One pairwise classifier: support rows with coef = alpha * y and a bias.
struct BinarySvm {
    int class_a = 0;  // decision > 0 votes class_a
    int class_b = 0;
    Matrix support;
    std::vector<double> coef;
    double bias = 0.0;
    bool converged = true;

    double decision(const double* xrow, std::size_t dim, double gamma) const {
        double f = bias;
        for (std::size_t s = 0; s < support.rows(); ++s)
            f += coef[s] * rbf_kernel(support.row(s), xrow, dim, gamma);
        return f;
    }
};

struct SvmModel {
    RbfSvmConfig cfg;
    Vocabulary vocab;
    std::size_t dim = 0;
    std::vector<double> feat_mean;  // populated only when cfg.standardize
    std::vector<double> feat_scale;
    std::vector<BinarySvm> pairs;

    bool all_converged() const {
        for (const auto& p : pairs)
            if (!p.converged) return false;
        return true;
    }

    // Per-class vote counts over the K(K-1)/2 pairwise decisions.
    std::vector<double> votes(const std::vector<double>& xin) const {
        if (xin.size() != dim) fail_data("svm_dim_mismatch", "predict dimension mismatch");
        std::vector<double> x = xin;
        if (!feat_mean.empty())
            for (std::size_t d = 0; d < dim; ++d) x[d] = (x[d] - feat_mean[d]) / feat_scale[d];
        std::vector<double> vote(vocab.size(), 0.0);
        for (const auto& p : pairs) {
            double f = p.decision(x.data(), dim, cfg.gamma);
            vote[f >= 0 ? p.class_a : p.class_b] += 1.0;
        }
        return vote;
    }

    int predict(const std::vector<double>& xin) const {
        std::vector<double> x = xin;
        if (xin.size() != dim) fail_data("svm_dim_mismatch", "predict dimension mismatch");
        if (!feat_mean.empty())
            for (std::size_t d = 0; d < dim; ++d) x[d] = (x[d] - feat_mean[d]) / feat_scale[d];
        std::vector<double> vote(vocab.size(), 0.0);
        std::vector<double> margin(vocab.size(), 0.0);  // sum |f| over won pairs
        for (const auto& p : pairs) {
            double f = p.decision(x.data(), dim, cfg.gamma);
            int winner = f >= 0 ? p.class_a : p.class_b;
            vote[winner] += 1.0;
            margin[winner] += std::abs(f);
        }
        std::size_t best = 0;
        for (std::size_t k = 1; k < vote.size(); ++k) {
            if (vote[k] > vote[best] ||
                (vote[k] == vote[best] && margin[k] > margin[best]))
                best = k;
        }
        return static_cast<int>(best);
    }
};

inline SvmModel svm_fit(const Dataset& data, const RbfSvmConfig& cfg) {
    cfg.validate();
    data.validate();
    const std::size_t num_classes = data.num_classes();
    if (num_classes < 2) fail_data("svm_bad_problem", "need at least two classes");
    auto counts = data.class_counts();
    for (std::size_t c = 0; c < num_classes; ++c)
        if (counts[c] == 0)
            fail_data("svm_empty_class", "class '" + data.vocab.name(c) + "' has no rows");

    SvmModel model;
    model.cfg = cfg;
    model.vocab = data.vocab;
    model.dim = data.dim();

    Matrix feats = data.features;
    if (cfg.standardize) {
        model.feat_mean.assign(model.dim, 0.0);
        model.feat_scale.assign(model.dim, 1.0);
        for (std::size_t r = 0; r < feats.rows(); ++r)
            for (std::size_t d = 0; d < model.dim; ++d) model.feat_mean[d] += feats.at(r, d);
        for (double& m : model.feat_mean) m /= static_cast<double>(feats.rows());
        std::vector<double> var(model.dim, 0.0);
        for (std::size_t r = 0; r < feats.rows(); ++r)
            for (std::size_t d = 0; d < model.dim; ++d) {
                double diff = feats.at(r, d) - model.feat_mean[d];
                var[d] += diff * diff;
            }
        for (std::size_t d = 0; d < model.dim; ++d) {
            double s = std::sqrt(var[d] / static_cast<double>(feats.rows()));
            model.feat_scale[d] = s > 0 ? s : 1.0;
        }
        for (std::size_t r = 0; r < feats.rows(); ++r)
            for (std::size_t d = 0; d < model.dim; ++d)
                feats.at(r, d) = (feats.at(r, d) - model.feat_mean[d]) / model.feat_scale[d];
    }

    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < data.size(); ++i)
        members[static_cast<std::size_t>(data.labels[i])].push_back(i);

    for (std::size_t a = 0; a < num_classes; ++a) {
        for (std::size_t b = a + 1; b < num_classes; ++b) {
            const std::size_t na = members[a].size(), nb = members[b].size();
            Matrix sub(na + nb, model.dim);
            std::vector<int> suby(na + nb);
            for (std::size_t r = 0; r < na; ++r) {
                std::copy(feats.row(members[a][r]), feats.row(members[a][r]) + model.dim,
                          sub.row(r));
                suby[r] = 1;
            }
            for (std::size_t r = 0; r < nb; ++r) {
                std::copy(feats.row(members[b][r]), feats.row(members[b][r]) + model.dim,
                          sub.row(na + r));
                suby[na + r] = -1;
            }
            BinarySvmSolution sol = smo_solve(sub, suby, cfg);

            BinarySvm bin;
            bin.class_a = static_cast<int>(a);
            bin.class_b = static_cast<int>(b);
            bin.bias = sol.bias;
            bin.converged = sol.converged;
            std::size_t n_sv = 0;
            for (double v : sol.alpha)
                if (v > 0) ++n_sv;
            bin.support = Matrix(n_sv, model.dim);
            bin.coef.reserve(n_sv);
            std::size_t s = 0;
            for (std::size_t r = 0; r < sub.rows(); ++r) {
                if (sol.alpha[r] <= 0) continue;
                std::copy(sub.row(r), sub.row(r) + model.dim, bin.support.row(s));
                bin.coef.push_back(sol.alpha[r] * suby[r]);
                ++s;
            }
            model.pairs.push_back(std::move(bin));
        }
    }
    return model;
}

inline std::vector<int> svm_predict(const SvmModel& model, const Matrix& x) {
    std::vector<int> out;
    out.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(model.predict(x.row_copy(r)));
    return out;
}

}  // namespace pathovox

#endif
