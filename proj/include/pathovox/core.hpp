#ifndef PATHOVOX_CORE_HPP
#define PATHOVOX_CORE_HPP

// Shared primitives: error taxonomy, deterministic RNG, dense matrix,
// label vocabulary and the in-memory dataset used by every stage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pathovox {

enum class ErrorKind { Config, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& msg)
        : std::runtime_error(msg), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Stable machine-readable tag, e.g. "emb_bad_magic".
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail_config(const std::string& code, const std::string& msg) {
    throw Error(ErrorKind::Config, code, msg);
}
[[noreturn]] inline void fail_data(const std::string& code, const std::string& msg) {
    throw Error(ErrorKind::Data, code, msg);
}
[[noreturn]] inline void fail_numeric(const std::string& code, const std::string& msg) {
    throw Error(ErrorKind::Numeric, code, msg);
}

// splitmix64: tiny counter-based generator with a fully specified integer
// stream, so identical seeds give identical draws on every platform.
// std::mt19937 would be fine for the engine, but the std:: distributions on
// top of it are implementation-defined; we need the mapping to doubles and
// gaussians pinned down too, hence the hand-rolled helpers below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1); 53 mantissa bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) via Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) fail_config("rng_zero_range", "Rng::below(0)");
        while (true) {
            std::uint64_t x = next_u64();
            unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
            std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= static_cast<std::uint64_t>(-static_cast<std::int64_t>(n)) % n)
                return static_cast<std::uint64_t>(m >> 64);
        }
    }

    // Standard normal via Box-Muller; caches the second draw of each pair.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double std) { return mean + std * gaussian(); }

    // Independent child stream; mixing the tag through one splitmix step of a
    // distinct increment keeps fork(a) and fork(b) decorrelated for a != b.
    Rng fork(std::uint64_t tag) const {
        std::uint64_t z = state_ + 0xd1b54a32d192ed03ull * (tag + 1);
        z = (z ^ (z >> 29)) * 0xff51afd7ed558ccdull;
        z = (z ^ (z >> 32)) * 0xc4ceb9fe1a85ec53ull;
        return Rng(z ^ (z >> 32));
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// First index of the maximum value: deterministic tie-breaking everywhere a
// score vector is turned into a class decision.
template <typename Container>
std::size_t argmax_tiebreak(const Container& values) {
    if (values.empty()) fail_config("argmax_empty", "argmax over empty range");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

// Fisher-Yates driven by our Rng; same seed, same permutation, anywhere.
inline std::vector<std::size_t> seeded_shuffle(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

template <typename T>
void apply_permutation(std::vector<T>& v, const std::vector<std::size_t>& perm) {
    std::vector<T> out;
    out.reserve(v.size());
    for (std::size_t i : perm) out.push_back(v[i]);
    v = std::move(out);
}

// Row-major dense matrix of doubles. Deliberately minimal: the numeric code
// in this library is explicit loops, not an expression framework.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != m.cols_)
                fail_data("matrix_ragged", "from_rows: ragged input");
            std::copy(rows[r].begin(), rows[r].end(), m.row(r));
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    std::vector<double> row_copy(std::size_t r) const {
        return std::vector<double>(row(r), row(r) + cols_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Ordered set of class names; index in the vocabulary is the integer label.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty()) fail_data("vocab_empty_name", "empty class name");
            for (std::size_t j = i + 1; j < names_.size(); ++j)
                if (names_[i] == names_[j])
                    fail_data("vocab_duplicate", "duplicate class name: " + names_[i]);
        }
    }

    // Canonical vocabulary for a set of observed names: sorted, deduplicated.
    static Vocabulary from_observed(std::vector<std::string> names) {
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        return Vocabulary(std::move(names));
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t label) const {
        if (label >= names_.size()) fail_data("vocab_bad_label", "label out of range");
        return names_[label];
    }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::optional<int> find(const std::string& name) const {
        for (std::size_t i = 0; i < names_.size(); ++i)
            if (names_[i] == name) return static_cast<int>(i);
        return std::nullopt;
    }
    int require(const std::string& name) const {
        auto idx = find(name);
        if (!idx) fail_data("vocab_unknown_name", "unknown class name: " + name);
        return *idx;
    }

    bool operator==(const Vocabulary& o) const { return names_ == o.names_; }

private:
    std::vector<std::string> names_;
};

// One feature row per recording. Labels are indices into `vocab`.
// `synthetic[i]` marks rows fabricated by resampling; evaluation code refuses
// datasets where any such row is present.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    Vocabulary vocab;
    std::vector<std::string> ids;          // empty or one per row
    std::vector<std::string> corpus_tags;  // empty or one per row
    std::vector<std::uint8_t> synthetic;   // empty means all-original
    std::optional<int> layer;              // transformer layer the rows came from

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    std::size_t num_classes() const noexcept { return vocab.size(); }

    bool is_synthetic(std::size_t i) const {
        return !synthetic.empty() && synthetic[i] != 0;
    }
    bool any_synthetic() const {
        for (std::uint8_t s : synthetic)
            if (s) return true;
        return false;
    }

    void validate() const {
        const std::size_t n = features.rows();
        if (n == 0) fail_data("dataset_empty", "dataset has no rows");
        if (labels.size() != n) fail_data("dataset_label_count", "labels/features row mismatch");
        if (!ids.empty() && ids.size() != n) fail_data("dataset_id_count", "ids/features row mismatch");
        if (!corpus_tags.empty() && corpus_tags.size() != n)
            fail_data("dataset_corpus_count", "corpus tags/features row mismatch");
        if (!synthetic.empty() && synthetic.size() != n)
            fail_data("dataset_flag_count", "synthetic flags/features row mismatch");
        if (vocab.size() == 0) fail_data("dataset_no_vocab", "empty vocabulary");
        for (int y : labels)
            if (y < 0 || static_cast<std::size_t>(y) >= vocab.size())
                fail_data("dataset_bad_label", "label index out of vocabulary range");
        if (!features.all_finite())
            fail_data("dataset_nonfinite", "non-finite feature value");
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(vocab.size(), 0);
        for (int y : labels) counts[static_cast<std::size_t>(y)]++;
        return counts;
    }

    // Row subset in the given order; per-row metadata follows along.
    Dataset subset(const std::vector<std::size_t>& idx) const {
        Dataset out;
        out.features = Matrix(idx.size(), features.cols());
        out.labels.reserve(idx.size());
        out.vocab = vocab;
        out.layer = layer;
        for (std::size_t r = 0; r < idx.size(); ++r) {
            std::size_t i = idx[r];
            if (i >= size()) fail_data("dataset_bad_index", "subset index out of range");
            std::copy(features.row(i), features.row(i) + features.cols(), out.features.row(r));
            out.labels.push_back(labels[i]);
            if (!ids.empty()) out.ids.push_back(ids[i]);
            if (!corpus_tags.empty()) out.corpus_tags.push_back(corpus_tags[i]);
            if (!synthetic.empty()) out.synthetic.push_back(synthetic[i]);
        }
        return out;
    }
};

}  // namespace pathovox

#endif
