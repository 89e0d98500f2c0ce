#ifndef PATHOVOX_TSNE_HPP
#define PATHOVOX_TSNE_HPP

// Exact O(N^2) t-SNE. Per-point kernel widths come from a bisection on the
// conditional perplexity; the map is optimized by gradient descent on
// KL(P || Q) with Student-t similarities, early exaggeration, and the
// two-stage momentum schedule. Coordinates are recentered every iteration.
// The recorded KL trace always uses the true (non-exaggerated) P so entries
// are comparable across the exaggeration boundary.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pathovox/core.hpp"
#include "pathovox/protocol.hpp"

namespace pathovox {

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_iters = 250;
    double momentum_start = 0.5;
    double momentum_final = 0.8;
    std::size_t momentum_switch = 250;
    std::uint64_t seed = 0;

    void validate(std::size_t n) const {
        if (!(perplexity > 1.0))
            fail_config("tsne_bad_perplexity", "perplexity must exceed 1");
        if (perplexity >= static_cast<double>(n))
            fail_config("tsne_bad_perplexity", "perplexity must be below the point count");
        if (iterations < 1) fail_config("tsne_bad_iterations", "iterations must be >= 1");
        if (!(learning_rate > 0.0)) fail_config("tsne_bad_lr", "learning rate must be > 0");
        if (!(early_exaggeration >= 1.0))
            fail_config("tsne_bad_exaggeration", "early exaggeration must be >= 1");
    }
};

struct TsneEmbedding {
    Matrix coords;  // N x 2
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    std::vector<std::string> corpus;
    std::vector<std::pair<std::size_t, double>> kl_trace;  // (iteration, KL)
};

inline Matrix pairwise_sqdist(const Matrix& x, std::size_t workers = 1) {
    const std::size_t n = x.rows();
    Matrix d2(n, n);
    parallel_for(n, workers, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* a = x.row(i);
            const double* b = x.row(j);
            double s = 0.0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                const double diff = a[c] - b[c];
                s += diff * diff;
            }
            d2.at(i, j) = s;
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d2.at(j, i) = d2.at(i, j);
    return d2;
}

namespace detail {

// Conditional row i for kernel precision beta; returns its perplexity.
inline double conditional_row(const Matrix& d2, std::size_t i, double beta,
                              std::vector<double>& row) {
    const std::size_t n = d2.rows();
    row.assign(n, 0.0);
    double lo = 1e300;
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) lo = std::min(lo, d2.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] = std::exp(-beta * (d2.at(i, j) - lo));
        sum += row[j];
    }
    double entropy = 0.0;  // bits
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        row[j] /= sum;
        if (row[j] > 0.0) entropy -= row[j] * std::log2(row[j]);
    }
    return std::exp2(entropy);
}

}  // namespace detail

// Joint similarity matrix: per-point bisection matches each conditional
// row's perplexity to the target, then P = (C + C^T) / 2N with p_ii = 0.
// When `conditionals` is given it receives the row-stochastic C for audit.
inline Matrix conditional_p(const Matrix& d2, double perplexity,
                            Matrix* conditionals = nullptr) {
    const std::size_t n = d2.rows();
    if (n < 2 || d2.cols() != n) fail_config("tsne_bad_distances", "need a square N>=2 matrix");
    if (!(perplexity > 1.0) || perplexity >= static_cast<double>(n))
        fail_config("tsne_bad_perplexity", "perplexity must lie in (1, N)");

    Matrix cond(n, n);
    std::vector<double> row;
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0;
        double perp = detail::conditional_row(d2, i, beta, row);
        // Perplexity decreases as beta grows; expand until the target is
        // bracketed, then bisect.
        double beta_lo = beta, beta_hi = beta;
        if (perp > perplexity) {
            for (int it = 0;; ++it) {
                if (it >= 200)
                    fail_numeric("tsne_no_bracket",
                                 "perplexity search failed to bracket at point " +
                                     std::to_string(i));
                beta_hi *= 2.0;
                if (detail::conditional_row(d2, i, beta_hi, row) <= perplexity) break;
            }
        } else {
            for (int it = 0;; ++it) {
                if (it >= 200)
                    fail_numeric("tsne_no_bracket",
                                 "perplexity search failed to bracket at point " +
                                     std::to_string(i));
                beta_lo /= 2.0;
                if (detail::conditional_row(d2, i, beta_lo, row) >= perplexity) break;
            }
        }
        for (int it = 0; it < 200; ++it) {
            beta = 0.5 * (beta_lo + beta_hi);
            perp = detail::conditional_row(d2, i, beta, row);
            if (std::abs(perp - perplexity) < 1e-6) break;
            (perp > perplexity ? beta_lo : beta_hi) = beta;
        }
        if (std::abs(perp - perplexity) > 1e-3)
            fail_numeric("tsne_no_bracket",
                         "perplexity search did not converge at point " + std::to_string(i));
        for (std::size_t j = 0; j < n; ++j) cond.at(i, j) = row[j];
    }
    if (conditionals) *conditionals = cond;

    Matrix p(n, n);
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) p.at(i, j) = (cond.at(i, j) + cond.at(j, i)) / denom;
    return p;
}

namespace detail {

struct TsneScratch {
    Matrix w;                      // Student-t kernel values
    std::vector<double> w_partial;  // per-row sums, reduced in index order
};

// Fills scratch.w and returns W = sum of all off-diagonal kernel values.
inline double student_t_weights(const Matrix& y, TsneScratch& s, std::size_t workers) {
    const std::size_t n = y.rows();
    if (s.w.rows() != n) s.w = Matrix(n, n);
    s.w_partial.assign(n, 0.0);
    parallel_for(n, workers, [&](std::size_t i) {
        double part = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                s.w.at(i, j) = 0.0;
                continue;
            }
            const double dx = y.at(i, 0) - y.at(j, 0);
            const double dy = y.at(i, 1) - y.at(j, 1);
            const double w = 1.0 / (1.0 + dx * dx + dy * dy);
            s.w.at(i, j) = w;
            part += w;
        }
        s.w_partial[i] = part;
    });
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += s.w_partial[i];
    return total;
}

}  // namespace detail

// KL(P || Q) for the Student-t map Q induced by `coords`.
inline double tsne_kl(const Matrix& p, const Matrix& coords, std::size_t workers = 1) {
    detail::TsneScratch s;
    const double total = detail::student_t_weights(coords, s, workers);
    const std::size_t n = p.rows();
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = p.at(i, j);
            if (i == j || pij <= 0.0) continue;
            kl += pij * std::log(pij / (s.w.at(i, j) / total));
        }
    return kl;
}

// dKL/dy: 4 * sum_j (p_ij - q_ij) * w_ij * (y_i - y_j).
inline Matrix tsne_gradient(const Matrix& p, const Matrix& coords, std::size_t workers = 1) {
    detail::TsneScratch s;
    const double total = detail::student_t_weights(coords, s, workers);
    const std::size_t n = p.rows();
    Matrix grad(n, 2);
    parallel_for(n, workers, [&](std::size_t i) {
        double gx = 0.0, gy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = s.w.at(i, j);
            const double mult = (p.at(i, j) - w / total) * w;
            gx += mult * (coords.at(i, 0) - coords.at(j, 0));
            gy += mult * (coords.at(i, 1) - coords.at(j, 1));
        }
        grad.at(i, 0) = 4.0 * gx;
        grad.at(i, 1) = 4.0 * gy;
    });
    return grad;
}

inline TsneEmbedding run_tsne(const Dataset& data, const TsneConfig& cfg,
                              std::size_t workers = 1) {
    data.validate();
    const std::size_t n = data.size();
    if (n < 4) fail_data("tsne_too_few_points", "t-SNE needs at least 4 points");
    cfg.validate(n);

    const Matrix p = conditional_p(pairwise_sqdist(data.features, workers), cfg.perplexity);

    TsneEmbedding out;
    out.coords = Matrix(n, 2);
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < n; ++i) {
        out.coords.at(i, 0) = rng.gaussian() * 1e-4;
        out.coords.at(i, 1) = rng.gaussian() * 1e-4;
    }
    out.ids = data.ids;
    out.corpus = data.corpus_tags;
    for (int label : data.labels)
        out.labels.push_back(data.vocab.name(static_cast<std::size_t>(label)));

    Matrix p_active = p;  // exaggerated copy used for the gradient
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p_active.at(i, j) *= cfg.early_exaggeration;

    Matrix velocity(n, 2);
    Matrix gains(n, 2, 1.0);  // canonical per-parameter adaptive gains
    for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
        if (iter == cfg.exaggeration_iters + 1) p_active = p;
        const double momentum =
            iter <= cfg.momentum_switch ? cfg.momentum_start : cfg.momentum_final;

        const Matrix grad = tsne_gradient(p_active, out.coords, workers);
        double mean_x = 0.0, mean_y = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < 2; ++c) {
                const bool opposed = (grad.at(i, c) > 0.0) != (velocity.at(i, c) > 0.0);
                gains.at(i, c) = opposed ? gains.at(i, c) + 0.2 : gains.at(i, c) * 0.8;
                gains.at(i, c) = std::max(gains.at(i, c), 0.01);
                velocity.at(i, c) = momentum * velocity.at(i, c) -
                                    cfg.learning_rate * gains.at(i, c) * grad.at(i, c);
            }
            mean_x += (out.coords.at(i, 0) += velocity.at(i, 0));
            mean_y += (out.coords.at(i, 1) += velocity.at(i, 1));
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.coords.at(i, 0) -= mean_x;
            out.coords.at(i, 1) -= mean_y;
        }

        if (iter % 50 == 0 || iter == cfg.iterations) {
            const double kl = tsne_kl(p, out.coords, workers);
            if (!std::isfinite(kl))
                fail_numeric("tsne_diverged",
                             "non-finite KL at iteration " + std::to_string(iter));
            if (out.kl_trace.empty() || out.kl_trace.back().first != iter)
                out.kl_trace.emplace_back(iter, kl);
        }
    }
    return out;
}

}  // namespace pathovox

#endif  // PATHOVOX_TSNE_HPP
