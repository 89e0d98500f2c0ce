#ifndef PATHOVOX_FFN_HPP
#define PATHOVOX_FFN_HPP

// Fully connected softmax classifier trained with Adam and an L2 penalty on
// the weights. Single-threaded per model; all randomness (initialization,
// per-epoch shuffles) comes from forks of one seeded root stream, so a
// (data, config, seed) triple yields a bit-identical model.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

enum class Activation { Tanh, ReLU };

inline const char* activation_name(Activation a) {
    return a == Activation::Tanh ? "tanh" : "relu";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::ReLU;
    fail_config("ffn_bad_activation", "unknown activation: " + s);
}

struct FfnConfig {
    double lr = 1e-2;
    double beta1 = 0.90;
    double beta2 = 0.99;
    double l2 = 1e-4;
    Activation activation = Activation::Tanh;
    std::size_t hidden_layers = 2;  // 2 or 3
    std::size_t hidden_units = 64;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double adam_epsilon = 1e-8;

    void validate() const {
        if (!(lr > 0.0) || !std::isfinite(lr))
            fail_config("ffn_bad_lr", "learning rate must be positive");
        if (hidden_layers != 2 && hidden_layers != 3)
            fail_config("ffn_bad_depth", "hidden_layers must be 2 or 3");
        if (hidden_units < 1) fail_config("ffn_bad_width", "hidden_units must be >= 1");
        if (batch_size < 1) fail_config("ffn_bad_batch", "batch_size must be >= 1");
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            fail_config("ffn_bad_beta", "Adam betas must lie in [0, 1)");
        if (l2 < 0.0) fail_config("ffn_bad_l2", "l2 must be >= 0");
        if (!(adam_epsilon > 0.0)) fail_config("ffn_bad_epsilon", "adam_epsilon must be > 0");
    }
};

struct FfnLayer {
    Matrix w;                // out x in
    std::vector<double> b;   // out
};

struct FfnModel {
    FfnConfig cfg;
    Vocabulary vocab;
    std::size_t input_dim = 0;
    std::vector<FfnLayer> layers;  // hidden_layers hidden blocks + linear head

    bool all_finite() const {
        for (const auto& l : layers) {
            if (!l.w.all_finite()) return false;
            for (double v : l.b)
                if (!std::isfinite(v)) return false;
        }
        return true;
    }

    // Class probabilities for one input row.
    std::vector<double> forward(const double* x, std::size_t dim) const {
        if (dim != input_dim) fail_config("ffn_dim_mismatch", "input dimension mismatch");
        std::vector<double> cur(x, x + dim), nxt;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& w = layers[l].w;
            nxt.assign(w.rows(), 0.0);
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const double* wr = w.row(r);
                double z = layers[l].b[r];
                for (std::size_t c = 0; c < w.cols(); ++c) z += wr[c] * cur[c];
                nxt[r] = z;
            }
            if (l + 1 < layers.size()) {
                if (cfg.activation == Activation::Tanh)
                    for (double& v : nxt) v = std::tanh(v);
                else
                    for (double& v : nxt) v = v > 0.0 ? v : 0.0;
            }
            cur.swap(nxt);
        }
        double mx = cur[0];
        for (double v : cur) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : cur) sum += (v = std::exp(v - mx));
        for (double& v : cur) v /= sum;
        return cur;
    }
    std::vector<double> forward(const std::vector<double>& x) const {
        return forward(x.data(), x.size());
    }

    std::size_t predict(const double* x, std::size_t dim) const {
        return argmax_tiebreak(forward(x, dim));
    }
    std::size_t predict(const std::vector<double>& x) const { return predict(x.data(), x.size()); }
};

// Gradients with the same shape as the model's parameters.
struct FfnGradients {
    std::vector<Matrix> dw;
    std::vector<std::vector<double>> db;

    void resize_like(const FfnModel& m) {
        dw.assign(m.layers.size(), {});
        db.assign(m.layers.size(), {});
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            dw[l] = Matrix(m.layers[l].w.rows(), m.layers[l].w.cols());
            db[l].assign(m.layers[l].b.size(), 0.0);
        }
    }
};

// Per-parameter Adam accumulators plus the shared step counter.
struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<std::vector<double>> mb, vb;
    std::uint64_t t = 0;

    void resize_like(const FfnModel& m) {
        mw.assign(m.layers.size(), {});
        vw.assign(m.layers.size(), {});
        mb.assign(m.layers.size(), {});
        vb.assign(m.layers.size(), {});
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            mw[l] = Matrix(m.layers[l].w.rows(), m.layers[l].w.cols());
            vw[l] = Matrix(m.layers[l].w.rows(), m.layers[l].w.cols());
            mb[l].assign(m.layers[l].b.size(), 0.0);
            vb[l].assign(m.layers[l].b.size(), 0.0);
        }
        t = 0;
    }
};

namespace detail {

// One Adam update over a flat parameter block, exactly:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
inline void adam_update(double* theta, const double* grad, double* m, double* v, std::size_t n,
                        double lr, double b1, double b2, double eps, std::uint64_t t) {
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

}  // namespace detail

// Applies one Adam step (state.t advances to the step index used).
inline void adam_step(FfnModel& model, const FfnGradients& grads, AdamState& state) {
    ++state.t;
    const auto& c = model.cfg;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& w = model.layers[l].w;
        detail::adam_update(w.data(), grads.dw[l].data(), state.mw[l].data(), state.vw[l].data(),
                            w.rows() * w.cols(), c.lr, c.beta1, c.beta2, c.adam_epsilon, state.t);
        detail::adam_update(model.layers[l].b.data(), grads.db[l].data(), state.mb[l].data(),
                            state.vb[l].data(), model.layers[l].b.size(), c.lr, c.beta1, c.beta2,
                            c.adam_epsilon, state.t);
    }
}

// Mean cross-entropy over the given rows plus (l2/2)*sum of squared weights
// (biases are not penalized). Gradients land in `grads`, resized to match.
inline double ffn_loss_and_grad(const FfnModel& model, const Matrix& x,
                                const std::vector<int>& y, const std::vector<std::size_t>& rows,
                                FfnGradients& grads) {
    if (rows.empty()) fail_config("ffn_empty_batch", "loss_and_grad on empty batch");
    if (x.cols() != model.input_dim) fail_config("ffn_dim_mismatch", "input dimension mismatch");
    const std::size_t depth = model.layers.size();
    const std::size_t k = model.layers.back().b.size();
    grads.resize_like(model);

    // act[0] is the input; act[l+1] the post-activation output of layer l.
    std::vector<std::vector<double>> act(depth + 1);
    std::vector<std::vector<double>> delta(depth);
    const double inv_b = 1.0 / static_cast<double>(rows.size());
    double loss = 0.0;

    for (std::size_t row : rows) {
        act[0].assign(x.row(row), x.row(row) + x.cols());
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& w = model.layers[l].w;
            act[l + 1].assign(w.rows(), 0.0);
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const double* wr = w.row(r);
                double z = model.layers[l].b[r];
                for (std::size_t c = 0; c < w.cols(); ++c) z += wr[c] * act[l][c];
                act[l + 1][r] = z;
            }
            if (l + 1 < depth) {
                if (model.cfg.activation == Activation::Tanh)
                    for (double& v : act[l + 1]) v = std::tanh(v);
                else
                    for (double& v : act[l + 1]) v = v > 0.0 ? v : 0.0;
            }
        }

        // Softmax + cross-entropy on the head; delta starts as p - onehot.
        auto& out = act[depth];
        double mx = out[0];
        for (double v : out) mx = std::max(mx, v);
        double sum = 0.0;
        for (double& v : out) sum += (v = std::exp(v - mx));
        const int label = y[row];
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            fail_data("ffn_bad_label", "label out of range");
        loss -= inv_b * std::log(out[static_cast<std::size_t>(label)] / sum);

        delta[depth - 1].assign(k, 0.0);
        for (std::size_t c = 0; c < k; ++c) delta[depth - 1][c] = out[c] / sum * inv_b;
        delta[depth - 1][static_cast<std::size_t>(label)] -= inv_b;

        for (std::size_t l = depth; l-- > 0;) {
            const auto& w = model.layers[l].w;
            auto& d = delta[l];
            for (std::size_t r = 0; r < w.rows(); ++r) {
                double* gw = grads.dw[l].row(r);
                const double dr = d[r];
                for (std::size_t c = 0; c < w.cols(); ++c) gw[c] += dr * act[l][c];
                grads.db[l][r] += dr;
            }
            if (l == 0) break;
            auto& dprev = delta[l - 1];
            dprev.assign(w.cols(), 0.0);
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const double* wr = w.row(r);
                const double dr = d[r];
                for (std::size_t c = 0; c < w.cols(); ++c) dprev[c] += wr[c] * dr;
            }
            if (model.cfg.activation == Activation::Tanh) {
                for (std::size_t c = 0; c < dprev.size(); ++c) {
                    const double a = act[l][c];
                    dprev[c] *= 1.0 - a * a;
                }
            } else {
                for (std::size_t c = 0; c < dprev.size(); ++c)
                    if (act[l][c] <= 0.0) dprev[c] = 0.0;
            }
        }
    }

    if (model.cfg.l2 > 0.0) {
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& w = model.layers[l].w;
            const double* wp = w.data();
            double* gp = grads.dw[l].data();
            const std::size_t n = w.rows() * w.cols();
            for (std::size_t i = 0; i < n; ++i) {
                loss += 0.5 * model.cfg.l2 * wp[i] * wp[i];
                gp[i] += model.cfg.l2 * wp[i];
            }
        }
    }
    return loss;
}

// Fresh model with scaled-uniform weights in +-sqrt(6/(fan_in+fan_out)) drawn
// from fork(0) of the seed stream; biases start at zero.
inline FfnModel ffn_init(std::size_t input_dim, const Vocabulary& vocab, const FfnConfig& cfg) {
    cfg.validate();
    if (input_dim == 0) fail_config("ffn_zero_dim", "input dimension must be >= 1");
    if (vocab.size() < 2) fail_data("ffn_single_class", "need at least two classes");

    FfnModel model;
    model.cfg = cfg;
    model.vocab = vocab;
    model.input_dim = input_dim;

    std::vector<std::size_t> widths{input_dim};
    for (std::size_t l = 0; l < cfg.hidden_layers; ++l) widths.push_back(cfg.hidden_units);
    widths.push_back(vocab.size());

    Rng rng = Rng(cfg.seed).fork(0);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        FfnLayer layer;
        layer.w = Matrix(widths[l + 1], widths[l]);
        layer.b.assign(widths[l + 1], 0.0);
        const double limit =
            std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
        double* p = layer.w.data();
        for (std::size_t i = 0; i < widths[l + 1] * widths[l]; ++i)
            p[i] = rng.uniform(-limit, limit);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

// epochs * ceil(N/batch) Adam steps over per-epoch reshuffled mini-batches.
inline FfnModel ffn_fit(const Dataset& data, const FfnConfig& cfg) {
    cfg.validate();
    data.validate();
    const std::size_t n = data.size();
    if (n == 0) fail_data("ffn_empty", "cannot fit on an empty dataset");

    FfnModel model = ffn_init(data.dim(), data.vocab, cfg);
    AdamState state;
    state.resize_like(model);
    FfnGradients grads;

    const std::size_t batch = std::min(cfg.batch_size, n);
    const Rng root(cfg.seed);
    std::vector<std::size_t> rows;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng = root.fork(1 + epoch);
        const auto perm = seeded_shuffle(n, shuffle_rng);
        for (std::size_t start = 0, step = 0; start < n; start += batch, ++step) {
            const std::size_t stop = std::min(start + batch, n);
            rows.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                        perm.begin() + static_cast<std::ptrdiff_t>(stop));
            const double loss = ffn_loss_and_grad(model, data.features, data.labels, rows, grads);
            if (!std::isfinite(loss))
                fail_numeric("ffn_diverged", "non-finite loss at epoch " + std::to_string(epoch) +
                                                 ", step " + std::to_string(step));
            adam_step(model, grads, state);
        }
    }
    if (!model.all_finite())
        fail_numeric("ffn_diverged", "non-finite parameters after training");
    return model;
}

inline std::vector<std::size_t> ffn_predict(const FfnModel& model, const Matrix& x) {
    std::vector<std::size_t> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = model.predict(x.row(i), x.cols());
    return out;
}

}  // namespace pathovox

#endif  // PATHOVOX_FFN_HPP
