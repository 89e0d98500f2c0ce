#ifndef PATHOVOX_MODEL_IO_HPP
#define PATHOVOX_MODEL_IO_HPP

// Versioned binary model container, shared by all three families.
//
// Layout (all integers little-endian, doubles IEEE-754 binary64):
//   magic   "PVM1"                     4 bytes
//   family  u8                         0 = svm, 1 = ffn, 2 = xgb
//   vocab   u32 count, then per name:  u32 length + raw bytes
//   payload                            family-specific, below
//
// svm payload:
//   cfg     f64 c, f64 gamma, f64 tol, u64 max_iter, u8 standardize
//   dim     u64
//   scaler  u64 count, f64[count] mean, f64[count] scale   (count 0 or dim)
//   pairs   u32 count, then per pair:
//             u32 class_a, u32 class_b, u8 converged, f64 bias,
//             u64 n_support, f64[n_support * dim] support rows,
//             f64[n_support] coefficients
//
// ffn payload:
//   cfg     f64 lr, f64 beta1, f64 beta2, f64 l2, u8 activation (0 tanh,
//           1 relu), u64 hidden_layers, u64 hidden_units, u64 epochs,
//           u64 batch_size, u64 seed, f64 adam_epsilon
//   dim     u64 input_dim
//   layers  u32 count, then per layer:
//             u64 rows, u64 cols, f64[rows * cols] weights, f64[rows] biases
//
// xgb payload:
//   cfg     u64 max_depth, f64 eta, f64 min_child_weight, u64 rounds,
//           f64 reg_lambda, u64 seed
//   dim     u64
//   loss    u64 count, f64[count] training-loss trace
//   trees   u32 rounds, u32 classes, then per tree:
//             u32 node count, per node: i32 feature, f64 threshold,
//             i32 left, i32 right, f64 weight
//
// Doubles round-trip bit-exactly, so a loaded model predicts byte-identically
// to the one saved.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pathovox/protocol.hpp"

namespace pathovox {

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

class ModelWriter {
public:
    explicit ModelWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) fail_data("model_io", "cannot open for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void i32(std::int32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void f64s(const double* p, std::size_t n) { bytes(p, 8 * n); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void close(const std::string& path) {
        out_.flush();
        if (!out_) fail_data("model_io", "write failed: " + path);
    }

private:
    std::ofstream out_;
};

class ModelReader {
public:
    explicit ModelReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) fail_data("model_io", "cannot open for reading: " + path);
    }
    void bytes(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            fail_data("model_truncated", "model file ends unexpectedly");
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void f64s(double* p, std::size_t n) { bytes(p, 8 * n); }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > (1u << 20)) fail_data("model_io", "unreasonable string length in model file");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    bool at_eof() {
        in_.peek();
        return in_.eof();
    }

private:
    std::ifstream in_;
};

inline void write_vocab(ModelWriter& w, const Vocabulary& v) {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& name : v.names()) w.str(name);
}

inline Vocabulary read_vocab(ModelReader& r) {
    const std::uint32_t n = r.u32();
    if (n > (1u << 16)) fail_data("model_io", "unreasonable vocabulary size in model file");
    std::vector<std::string> names;
    names.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) names.push_back(r.str());
    return Vocabulary(std::move(names));
}

}  // namespace detail

inline void save_model(const AnyModel& model, const std::string& path) {
    detail::ModelWriter w(path);
    w.bytes("PVM1", 4);
    switch (model.family) {
        case ModelFamily::Svm: {
            const SvmModel& m = *model.svm;
            w.u8(0);
            detail::write_vocab(w, m.vocab);
            w.f64(m.cfg.c);
            w.f64(m.cfg.gamma);
            w.f64(m.cfg.tol);
            w.u64(m.cfg.max_iter);
            w.u8(m.cfg.standardize ? 1 : 0);
            w.u64(m.dim);
            w.u64(m.feat_mean.size());
            w.f64s(m.feat_mean.data(), m.feat_mean.size());
            w.f64s(m.feat_scale.data(), m.feat_scale.size());
            w.u32(static_cast<std::uint32_t>(m.pairs.size()));
            for (const auto& p : m.pairs) {
                w.u32(static_cast<std::uint32_t>(p.class_a));
                w.u32(static_cast<std::uint32_t>(p.class_b));
                w.u8(p.converged ? 1 : 0);
                w.f64(p.bias);
                w.u64(p.support.rows());
                w.f64s(p.support.data(), p.support.rows() * p.support.cols());
                w.f64s(p.coef.data(), p.coef.size());
            }
            break;
        }
        case ModelFamily::Ffn: {
            const FfnModel& m = *model.ffn;
            w.u8(1);
            detail::write_vocab(w, m.vocab);
            w.f64(m.cfg.lr);
            w.f64(m.cfg.beta1);
            w.f64(m.cfg.beta2);
            w.f64(m.cfg.l2);
            w.u8(m.cfg.activation == Activation::Tanh ? 0 : 1);
            w.u64(m.cfg.hidden_layers);
            w.u64(m.cfg.hidden_units);
            w.u64(m.cfg.epochs);
            w.u64(m.cfg.batch_size);
            w.u64(m.cfg.seed);
            w.f64(m.cfg.adam_epsilon);
            w.u64(m.input_dim);
            w.u32(static_cast<std::uint32_t>(m.layers.size()));
            for (const auto& l : m.layers) {
                w.u64(l.w.rows());
                w.u64(l.w.cols());
                w.f64s(l.w.data(), l.w.rows() * l.w.cols());
                w.f64s(l.b.data(), l.b.size());
            }
            break;
        }
        case ModelFamily::Xgb: {
            const GbtModel& m = *model.gbt;
            w.u8(2);
            detail::write_vocab(w, m.vocab);
            w.u64(m.cfg.max_depth);
            w.f64(m.cfg.eta);
            w.f64(m.cfg.min_child_weight);
            w.u64(m.cfg.rounds);
            w.f64(m.cfg.reg_lambda);
            w.u64(m.cfg.seed);
            w.u64(m.dim);
            w.u64(m.train_loss.size());
            w.f64s(m.train_loss.data(), m.train_loss.size());
            w.u32(static_cast<std::uint32_t>(m.trees.size()));
            w.u32(m.trees.empty() ? 0
                                  : static_cast<std::uint32_t>(m.trees.front().size()));
            for (const auto& round : m.trees)
                for (const auto& tree : round) {
                    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
                    for (const auto& node : tree.nodes) {
                        w.i32(node.feature);
                        w.f64(node.threshold);
                        w.i32(node.left);
                        w.i32(node.right);
                        w.f64(node.weight);
                    }
                }
            break;
        }
    }
    w.close(path);
}

inline AnyModel load_model(const std::string& path) {
    detail::ModelReader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "PVM1", 4) != 0)
        fail_data("model_bad_magic", "not a model file: " + path);

    AnyModel out;
    const std::uint8_t family = r.u8();
    const Vocabulary vocab = detail::read_vocab(r);
    switch (family) {
        case 0: {
            SvmModel m;
            m.vocab = vocab;
            m.cfg.c = r.f64();
            m.cfg.gamma = r.f64();
            m.cfg.tol = r.f64();
            m.cfg.max_iter = r.u64();
            m.cfg.standardize = r.u8() != 0;
            m.dim = r.u64();
            const std::uint64_t scaler = r.u64();
            if (scaler != 0 && scaler != m.dim)
                fail_data("model_io", "scaler length does not match dimension");
            m.feat_mean.resize(scaler);
            r.f64s(m.feat_mean.data(), scaler);
            m.feat_scale.resize(scaler);
            r.f64s(m.feat_scale.data(), scaler);
            const std::uint32_t pairs = r.u32();
            for (std::uint32_t i = 0; i < pairs; ++i) {
                BinarySvm p;
                p.class_a = static_cast<int>(r.u32());
                p.class_b = static_cast<int>(r.u32());
                p.converged = r.u8() != 0;
                p.bias = r.f64();
                const std::uint64_t ns = r.u64();
                p.support = Matrix(ns, m.dim);
                r.f64s(p.support.data(), ns * m.dim);
                p.coef.resize(ns);
                r.f64s(p.coef.data(), ns);
                m.pairs.push_back(std::move(p));
            }
            out.family = ModelFamily::Svm;
            out.svm = std::move(m);
            break;
        }
        case 1: {
            FfnModel m;
            m.vocab = vocab;
            m.cfg.lr = r.f64();
            m.cfg.beta1 = r.f64();
            m.cfg.beta2 = r.f64();
            m.cfg.l2 = r.f64();
            m.cfg.activation = r.u8() == 0 ? Activation::Tanh : Activation::ReLU;
            m.cfg.hidden_layers = r.u64();
            m.cfg.hidden_units = r.u64();
            m.cfg.epochs = r.u64();
            m.cfg.batch_size = r.u64();
            m.cfg.seed = r.u64();
            m.cfg.adam_epsilon = r.f64();
            m.input_dim = r.u64();
            const std::uint32_t layers = r.u32();
            for (std::uint32_t i = 0; i < layers; ++i) {
                FfnLayer l;
                const std::uint64_t rows = r.u64();
                const std::uint64_t cols = r.u64();
                l.w = Matrix(rows, cols);
                r.f64s(l.w.data(), rows * cols);
                l.b.resize(rows);
                r.f64s(l.b.data(), rows);
                m.layers.push_back(std::move(l));
            }
            out.family = ModelFamily::Ffn;
            out.ffn = std::move(m);
            break;
        }
        case 2: {
            GbtModel m;
            m.vocab = vocab;
            m.cfg.max_depth = r.u64();
            m.cfg.eta = r.f64();
            m.cfg.min_child_weight = r.f64();
            m.cfg.rounds = r.u64();
            m.cfg.reg_lambda = r.f64();
            m.cfg.seed = r.u64();
            m.dim = r.u64();
            const std::uint64_t losses = r.u64();
            m.train_loss.resize(losses);
            r.f64s(m.train_loss.data(), losses);
            const std::uint32_t rounds = r.u32();
            const std::uint32_t classes = r.u32();
            for (std::uint32_t t = 0; t < rounds; ++t) {
                std::vector<GbtTree> round;
                for (std::uint32_t k = 0; k < classes; ++k) {
                    GbtTree tree;
                    const std::uint32_t nodes = r.u32();
                    tree.nodes.resize(nodes);
                    for (auto& node : tree.nodes) {
                        node.feature = r.i32();
                        node.threshold = r.f64();
                        node.left = r.i32();
                        node.right = r.i32();
                        node.weight = r.f64();
                    }
                    round.push_back(std::move(tree));
                }
                m.trees.push_back(std::move(round));
            }
            out.family = ModelFamily::Xgb;
            out.gbt = std::move(m);
            break;
        }
        default:
            fail_data("model_bad_family", "unknown model family tag in " + path);
    }
    if (!r.at_eof()) fail_data("model_io", "trailing bytes after model payload: " + path);
    return out;
}

}  // namespace pathovox

#endif  // PATHOVOX_MODEL_IO_HPP
