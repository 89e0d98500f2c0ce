#ifndef PATHOVOX_GBT_HPP
#define PATHOVOX_GBT_HPP

// Second-order gradient tree boosting with a softmax objective.
//
// Per round and class, a regression tree is fit to gradients g = p - 1{y=k}
// and hessians h = p(1-p) by exact greedy search: every feature, every
// midpoint threshold. Split gain
//
//   1/2 [ G_L^2/(H_L+l) + G_R^2/(H_R+l) - (G_L+G_R)^2/(H_L+H_R+l) ]
//
// must be positive and both children need hessian mass >= min_child_weight;
// leaves take weight -G/(H+l). The splitter walks pre-sorted feature columns
// that are stably partitioned level by level, so the whole fit is
// deterministic and invariant to training-row order (ties: lowest feature,
// then lowest threshold, by scan order).

#include <cstdint>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct GbtConfig {
    std::size_t max_depth = 6;
    double eta = 0.3;
    double min_child_weight = 1.0;
    std::size_t rounds = 100;
    double reg_lambda = 1.0;
    std::uint64_t seed = 0;  // reserved for subsampling variants; exact greedy is deterministic

    void validate() const {
        if (max_depth < 1) fail_config("gbt_bad_depth", "max_depth must be >= 1");
        if (!(eta > 0.0) || eta > 1.0) fail_config("gbt_bad_eta", "eta must be in (0, 1]");
        if (!(min_child_weight >= 0.0))
            fail_config("gbt_bad_min_child_weight", "min_child_weight must be >= 0");
        if (rounds < 1) fail_config("gbt_bad_rounds", "rounds must be >= 1");
        if (!(reg_lambda >= 0.0)) fail_config("gbt_bad_lambda", "lambda must be >= 0");
    }
};

struct GbtNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x[feature] < threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    double weight = 0.0;
};

struct GbtTree {
    std::vector<GbtNode> nodes;

    double value(const double* x) const {
        std::size_t id = 0;
        while (nodes[id].feature >= 0)
            id = x[nodes[id].feature] < nodes[id].threshold
                     ? static_cast<std::size_t>(nodes[id].left)
                     : static_cast<std::size_t>(nodes[id].right);
        return nodes[id].weight;
    }
};

// Column order shared by every tree of a fit: per feature, sample indices
// sorted by (value, index).
inline std::vector<std::vector<std::uint32_t>> presort_columns(const Matrix& x) {
    std::vector<std::vector<std::uint32_t>> cols(x.cols());
    for (std::size_t d = 0; d < x.cols(); ++d) {
        auto& col = cols[d];
        col.resize(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) col[i] = static_cast<std::uint32_t>(i);
        std::sort(col.begin(), col.end(), [&](std::uint32_t a, std::uint32_t b) {
            double va = x.at(a, d), vb = x.at(b, d);
            if (va != vb) return va < vb;
            return a < b;
        });
    }
    return cols;
}

namespace detail {

struct GbtGroup {
    std::int32_t node_id;
    std::size_t begin;
    std::size_t count;
    double g_sum;
    double h_sum;
    std::size_t depth;
};

struct GbtSplit {
    double gain = 0.0;
    std::int32_t feature = -1;
    double threshold = 0.0;
};

}  // namespace detail

// Builds one tree; `cols` is consumed (partitioned in place). When given,
// `out_pred` receives each sample's leaf weight.
inline GbtTree build_tree_presorted(const Matrix& x, std::vector<std::vector<std::uint32_t>>& cols,
                                    const std::vector<double>& g, const std::vector<double>& h,
                                    const GbtConfig& cfg, std::vector<double>* out_pred = nullptr) {
    const std::size_t n = x.rows(), dims = x.cols();
    const double lam = cfg.reg_lambda;
    const double w_min = cfg.min_child_weight;

    GbtTree tree;
    tree.nodes.emplace_back();
    if (out_pred) out_pred->assign(n, 0.0);

    double g0 = 0, h0 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        g0 += g[i];
        h0 += h[i];
    }

    auto finalize_leaf = [&](const detail::GbtGroup& grp) {
        double w = -grp.g_sum / (grp.h_sum + lam);
        tree.nodes[grp.node_id].weight = w;
        if (out_pred)
            for (std::size_t p = grp.begin; p < grp.begin + grp.count; ++p)
                (*out_pred)[cols[0][p]] = w;
    };

    std::vector<detail::GbtGroup> active{{0, 0, n, g0, h0, 0}};
    std::vector<std::uint8_t> side(n);
    std::vector<std::uint32_t> buf;
    std::vector<double> suf_g(n), suf_h(n);

    while (!active.empty()) {
        std::vector<detail::GbtSplit> best(active.size());
        for (std::size_t d = 0; d < dims; ++d) {
            for (std::size_t gi = 0; gi < active.size(); ++gi) {
                const auto& grp = active[gi];
                const std::uint32_t* idx = cols[d].data() + grp.begin;
                // Right-side sums accumulated directly (not by subtraction
                // from the group total): identical partitions reached through
                // different features then produce bitwise-identical gains, so
                // the documented tie-break (lowest feature, lowest threshold)
                // decides, not rounding noise.
                double acc_g = 0, acc_h = 0;
                for (std::size_t p = grp.count; p-- > 0;) {
                    acc_g += g[idx[p]];
                    acc_h += h[idx[p]];
                    suf_g[p] = acc_g;
                    suf_h[p] = acc_h;
                }
                const double parent_term = grp.g_sum * grp.g_sum / (grp.h_sum + lam);
                double gl = 0, hl = 0;
                double prev = x.at(idx[0], d);
                for (std::size_t p = 0; p < grp.count; ++p) {
                    const std::uint32_t i = idx[p];
                    const double v = x.at(i, d);
                    if (p > 0 && v > prev) {
                        const double hr = suf_h[p];
                        if (hl >= w_min && hr >= w_min) {
                            const double gr = suf_g[p];
                            const double gain =
                                0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_term);
                            if (gain > best[gi].gain) {
                                best[gi].gain = gain;
                                best[gi].feature = static_cast<std::int32_t>(d);
                                best[gi].threshold = (prev + v) / 2.0;
                            }
                        }
                    }
                    gl += g[i];
                    hl += h[i];
                    prev = v;
                }
            }
        }

        std::vector<detail::GbtGroup> next;
        for (std::size_t gi = 0; gi < active.size(); ++gi) {
            const auto& grp = active[gi];
            const auto& sp = best[gi];
            if (sp.feature < 0 || !(sp.gain > 0.0)) {
                finalize_leaf(grp);
                continue;
            }
            GbtNode& nd = tree.nodes[grp.node_id];
            nd.feature = sp.feature;
            nd.threshold = sp.threshold;
            nd.left = static_cast<std::int32_t>(tree.nodes.size());
            nd.right = nd.left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();

            double gl = 0, hl = 0;
            std::size_t n_left = 0;
            for (std::size_t p = grp.begin; p < grp.begin + grp.count; ++p) {
                const std::uint32_t i = cols[0][p];
                const bool left = x.at(i, sp.feature) < sp.threshold;
                side[i] = left;
                if (left) {
                    gl += g[i];
                    hl += h[i];
                    ++n_left;
                }
            }
            // Stable partition of every column's slice keeps children sorted.
            buf.resize(grp.count);
            for (std::size_t d = 0; d < dims; ++d) {
                std::uint32_t* slice = cols[d].data() + grp.begin;
                std::size_t lo = 0, hi = n_left;
                for (std::size_t p = 0; p < grp.count; ++p) {
                    const std::uint32_t i = slice[p];
                    buf[side[i] ? lo++ : hi++] = i;
                }
                std::copy(buf.begin(), buf.end(), slice);
            }

            detail::GbtGroup lgrp{tree.nodes[grp.node_id].left, grp.begin, n_left, gl, hl,
                                  grp.depth + 1};
            detail::GbtGroup rgrp{tree.nodes[grp.node_id].right, grp.begin + n_left,
                                  grp.count - n_left, grp.g_sum - gl, grp.h_sum - hl,
                                  grp.depth + 1};
            for (const auto& child : {lgrp, rgrp}) {
                if (child.depth < cfg.max_depth && child.count >= 2)
                    next.push_back(child);
                else
                    finalize_leaf(child);
            }
        }
        active.swap(next);
    }
    return tree;
}

inline GbtTree build_tree(const Matrix& x, const std::vector<double>& g,
                          const std::vector<double>& h, const GbtConfig& cfg,
                          std::vector<double>* out_pred = nullptr) {
    if (x.rows() == 0 || g.size() != x.rows() || h.size() != x.rows())
        fail_data("gbt_bad_problem", "build_tree: g/h must match the row count");
    for (double v : h)
        if (!(v > 0)) fail_data("gbt_bad_problem", "build_tree: hessians must be positive");
    auto cols = presort_columns(x);
    return build_tree_presorted(x, cols, g, h, cfg, out_pred);
}

namespace detail {

// Row-wise softmax with max subtraction; returns mean log-loss as well.
inline double softmax_rows(const Matrix& logits, const std::vector<int>& labels, Matrix& probs) {
    const std::size_t n = logits.rows(), k = logits.cols();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* l = logits.row(i);
        double m = l[0];
        for (std::size_t c = 1; c < k; ++c) m = std::max(m, l[c]);
        double z = 0.0;
        double* p = probs.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            p[c] = std::exp(l[c] - m);
            z += p[c];
        }
        for (std::size_t c = 0; c < k; ++c) p[c] /= z;
        loss += std::log(z) + m - l[labels[i]];
    }
    return loss / static_cast<double>(n);
}

}  // namespace detail

// g = p - 1{y=k}, h = p(1-p), the second-order expansion of multiclass
// log-loss at the current logits.
inline std::pair<Matrix, Matrix> softmax_grad_hess(const Matrix& logits,
                                                   const std::vector<int>& labels) {
    if (logits.rows() != labels.size())
        fail_data("gbt_bad_problem", "softmax_grad_hess: label count mismatch");
    if (!logits.all_finite()) fail_numeric("gbt_nonfinite", "non-finite logits");
    Matrix probs(logits.rows(), logits.cols());
    detail::softmax_rows(logits, labels, probs);
    Matrix g(logits.rows(), logits.cols()), h(logits.rows(), logits.cols());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            double p = probs.at(i, c);
            g.at(i, c) = p - (labels[i] == static_cast<int>(c) ? 1.0 : 0.0);
            h.at(i, c) = p * (1.0 - p);
        }
    }
    return {std::move(g), std::move(h)};
}

struct GbtModel {
    GbtConfig cfg;
    Vocabulary vocab;
    std::size_t dim = 0;
    std::vector<std::vector<GbtTree>> trees;  // [round][class], raw leaf weights
    std::vector<double> train_loss;           // initial loss, then one entry per round

    std::vector<double> logits_for(const double* x) const {
        std::vector<double> l(vocab.size(), 0.0);
        for (const auto& round : trees)
            for (std::size_t k = 0; k < round.size(); ++k) l[k] += cfg.eta * round[k].value(x);
        return l;
    }

    std::vector<double> predict_proba(const std::vector<double>& x) const {
        if (x.size() != dim) fail_data("gbt_dim_mismatch", "predict dimension mismatch");
        std::vector<double> l = logits_for(x.data());
        double m = l[0];
        for (double v : l) m = std::max(m, v);
        double z = 0.0;
        for (double& v : l) {
            v = std::exp(v - m);
            z += v;
        }
        for (double& v : l) v /= z;
        return l;
    }

    int predict(const std::vector<double>& x) const {
        return static_cast<int>(argmax_tiebreak(predict_proba(x)));
    }
};

inline GbtModel gbt_fit(const Dataset& data, const GbtConfig& cfg) {
    cfg.validate();
    data.validate();
    const std::size_t n = data.size(), k = data.num_classes();
    if (k < 2) fail_data("gbt_single_class", "need at least two classes");
    {
        auto counts = data.class_counts();
        std::size_t present = 0;
        for (auto c : counts) present += c > 0 ? 1 : 0;
        if (present < 2)
            fail_data("gbt_single_class", "training data contains a single class label");
    }

    GbtModel model;
    model.cfg = cfg;
    model.vocab = data.vocab;
    model.dim = data.dim();
    model.trees.reserve(cfg.rounds);

    const auto global_cols = presort_columns(data.features);
    Matrix logits(n, k, 0.0);
    Matrix probs(n, k);
    std::vector<double> gk(n), hk(n), pred(n);

    model.train_loss.push_back(detail::softmax_rows(logits, data.labels, probs));
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        detail::softmax_rows(logits, data.labels, probs);
        std::vector<GbtTree> round;
        round.reserve(k);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                double p = probs.at(i, c);
                gk[i] = p - (data.labels[i] == static_cast<int>(c) ? 1.0 : 0.0);
                hk[i] = p * (1.0 - p);
            }
            auto cols = global_cols;
            round.push_back(build_tree_presorted(data.features, cols, gk, hk, cfg, &pred));
            for (std::size_t i = 0; i < n; ++i) logits.at(i, c) += cfg.eta * pred[i];
        }
        model.trees.push_back(std::move(round));
        double loss = detail::softmax_rows(logits, data.labels, probs);
        if (!std::isfinite(loss))
            fail_numeric("gbt_diverged", "non-finite training loss at round " + std::to_string(r));
        model.train_loss.push_back(loss);
    }
    return model;
}

inline std::vector<int> gbt_predict(const GbtModel& model, const Matrix& x) {
    std::vector<int> out;
    out.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(model.predict(x.row_copy(r)));
    return out;
}

}  // namespace pathovox

#endif
