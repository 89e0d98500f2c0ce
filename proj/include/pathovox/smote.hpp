#ifndef PATHOVOX_SMOTE_HPP
#define PATHOVOX_SMOTE_HPP

// SMOTE over-sampling: minority classes are topped up to the majority count
// with convex combinations of class-internal nearest neighbors. Originals
// pass through untouched and first; synthetic rows are flagged so downstream
// evaluation can refuse them.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct SmoteConfig {
    std::size_t k_neighbors = 5;  // clamped to class size - 1
    std::uint64_t seed = 0;
};

namespace detail {

// Indices of the k nearest same-class rows for each class member, brute
// force, ties broken toward the lower row index so results never depend on
// sort internals.
inline std::vector<std::vector<std::size_t>> knn_table(const Matrix& x,
                                                       const std::vector<std::size_t>& members,
                                                       std::size_t k) {
    const std::size_t n = members.size();
    std::vector<std::vector<std::size_t>> nn(n);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < n; ++a) {
        dist.clear();
        const double* xa = x.row(members[a]);
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            const double* xb = x.row(members[b]);
            double d2 = 0;
            for (std::size_t c = 0; c < x.cols(); ++c) {
                double diff = xa[c] - xb[c];
                d2 += diff * diff;
            }
            dist.emplace_back(d2, b);
        }
        std::sort(dist.begin(), dist.end());
        nn[a].reserve(k);
        for (std::size_t i = 0; i < k && i < dist.size(); ++i) nn[a].push_back(dist[i].second);
    }
    return nn;
}

}  // namespace detail

inline Dataset smote_resample(const Dataset& data, const SmoteConfig& cfg) {
    if (cfg.k_neighbors < 1) fail_config("smote_bad_k", "k_neighbors must be >= 1");
    data.validate();

    const std::size_t n = data.size();
    const std::size_t dim = data.dim();
    const std::size_t num_classes = data.num_classes();
    auto counts = data.class_counts();
    const std::size_t target = *std::max_element(counts.begin(), counts.end());

    std::size_t total = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] < target && counts[c] < 2)
            fail_data("smote_class_too_small",
                      "class too small for SMOTE: '" + data.vocab.name(c) + "' has " +
                          std::to_string(counts[c]) + " sample(s), need at least 2");
        total += target;
    }

    Dataset out;
    out.vocab = data.vocab;
    out.layer = data.layer;
    out.features = Matrix(total, dim);
    out.labels.reserve(total);
    out.synthetic.reserve(total);

    const bool has_ids = !data.ids.empty();
    const bool has_corpus = !data.corpus_tags.empty();

    // Originals verbatim, in their incoming order.
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(data.features.row(i), data.features.row(i) + dim, out.features.row(i));
        out.labels.push_back(data.labels[i]);
        out.synthetic.push_back(data.is_synthetic(i) ? 1 : 0);
        if (has_ids) out.ids.push_back(data.ids[i]);
        if (has_corpus) out.corpus_tags.push_back(data.corpus_tags[i]);
    }

    std::vector<std::vector<std::size_t>> members(num_classes);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(data.labels[i])].push_back(i);

    Rng root(cfg.seed);
    std::size_t row = n;
    std::size_t ordinal = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t need = target - counts[c];
        if (need == 0) continue;
        const auto& mem = members[c];
        const std::size_t k = std::min(cfg.k_neighbors, mem.size() - 1);
        auto nn = detail::knn_table(data.features, mem, k);
        // Per-class stream: synthesis for one class is unaffected by how many
        // rows the other classes needed.
        Rng rng = root.fork(c);
        for (std::size_t s = 0; s < need; ++s, ++row, ++ordinal) {
            std::size_t a = static_cast<std::size_t>(rng.below(mem.size()));
            std::size_t b = nn[a][static_cast<std::size_t>(rng.below(k))];
            double u = rng.uniform();
            const double* xa = data.features.row(mem[a]);
            const double* xb = data.features.row(mem[b]);
            double* dst = out.features.row(row);
            for (std::size_t d = 0; d < dim; ++d) dst[d] = xa[d] + u * (xb[d] - xa[d]);
            out.labels.push_back(static_cast<int>(c));
            out.synthetic.push_back(1);
            if (has_ids) out.ids.push_back(data.ids[mem[a]] + "#s" + std::to_string(ordinal));
            if (has_corpus) out.corpus_tags.push_back(data.corpus_tags[mem[a]]);
        }
    }

    out.validate();
    return out;
}

}  // namespace pathovox

#endif
