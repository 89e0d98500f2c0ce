#ifndef PATHOVOX_EMBEDDING_HPP
#define PATHOVOX_EMBEDDING_HPP

// EMB1 frame-embedding files and their reduction to fixed-length vectors.
//
// Layout (little-endian): 4 bytes "EMB1" | u32 frame count T | u32 dim D |
// T*D float32, row-major. The file size must be exactly 12 + 4*T*D.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pathovox/core.hpp"
#include "pathovox/manifest.hpp"

namespace pathovox {

static_assert(std::endian::native == std::endian::little,
              "EMB1 and model container I/O assume a little-endian host");

inline Matrix read_embedding(const std::string& path) {
    std::error_code ec;
    const auto fsize = std::filesystem::file_size(path, ec);
    if (ec) fail_data("emb_io", "cannot stat embedding file: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("emb_io", "cannot open embedding file: " + path);

    char magic[4];
    std::uint32_t t = 0, d = 0;
    if (fsize < 12 || !in.read(magic, 4) ||
        !in.read(reinterpret_cast<char*>(&t), 4) ||
        !in.read(reinterpret_cast<char*>(&d), 4))
        fail_data("emb_truncated", "embedding file shorter than its header: " + path);
    if (std::memcmp(magic, "EMB1", 4) != 0)
        fail_data("emb_bad_magic", "not an EMB1 file: " + path);
    if (t == 0 || d == 0)
        fail_data("emb_zero_dims", "embedding file with zero frames or dims: " + path);

    const std::uint64_t want = 12ull + 4ull * t * d;
    if (fsize != want)
        fail_data("emb_truncated", "embedding payload size mismatch in " + path + ": file has " +
                                       std::to_string(fsize) + " bytes, header implies " +
                                       std::to_string(want));

    std::vector<float> buf(static_cast<std::size_t>(t) * d);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4)))
        fail_data("emb_truncated", "embedding payload read failed: " + path);

    Matrix m(t, d);
    for (std::size_t i = 0; i < buf.size(); ++i) {
        if (!std::isfinite(buf[i]))
            fail_data("emb_nonfinite", "non-finite frame value in " + path);
        m.data()[i] = static_cast<double>(buf[i]);
    }
    return m;
}

inline void write_embedding(const std::string& path, const Matrix& frames) {
    if (frames.rows() == 0 || frames.cols() == 0)
        fail_data("emb_zero_dims", "refusing to write embedding with zero frames or dims");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("emb_io", "cannot write embedding file: " + path);
    const std::uint32_t t = static_cast<std::uint32_t>(frames.rows());
    const std::uint32_t d = static_cast<std::uint32_t>(frames.cols());
    out.write("EMB1", 4);
    out.write(reinterpret_cast<const char*>(&t), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    std::vector<float> buf(frames.rows() * frames.cols());
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(frames.data()[i]);
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * 4));
    if (!out) fail_data("emb_io", "write failed: " + path);
}

// Temporal mean over frames: T x D -> D.
inline std::vector<double> mean_pool(const Matrix& frames) {
    if (frames.rows() == 0 || frames.cols() == 0)
        fail_data("emb_zero_dims", "mean_pool over empty matrix");
    std::vector<double> out(frames.cols(), 0.0);
    for (std::size_t r = 0; r < frames.rows(); ++r) {
        const double* row = frames.row(r);
        for (std::size_t c = 0; c < frames.cols(); ++c) out[c] += row[c];
    }
    const double inv = 1.0 / static_cast<double>(frames.rows());
    for (double& v : out) v *= inv;
    return out;
}

// Materialise one row per manifest entry from the given transformer layer.
// Paths in templates are resolved relative to `root` unless absolute.
// When `vocab` is empty the vocabulary is the sorted set of observed labels.
inline Dataset assemble_dataset(const std::vector<ManifestRow>& rows, int layer,
                                const std::string& root = "",
                                const Vocabulary& vocab = Vocabulary()) {
    if (rows.empty()) fail_data("manifest_no_rows", "cannot assemble from zero manifest rows");
    Dataset d;
    if (vocab.size() > 0) {
        d.vocab = vocab;
    } else {
        std::vector<std::string> names;
        names.reserve(rows.size());
        for (const auto& r : rows) names.push_back(r.label);
        d.vocab = Vocabulary::from_observed(std::move(names));
    }

    d.layer = layer;
    d.labels.reserve(rows.size());
    d.ids.reserve(rows.size());
    d.corpus_tags.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::filesystem::path p = substitute_layer(rows[i].emb_template, layer);
        if (!root.empty() && p.is_relative()) p = std::filesystem::path(root) / p;
        Matrix frames = read_embedding(p.string());
        std::vector<double> pooled = mean_pool(frames);
        if (i == 0) {
            d.features = Matrix(rows.size(), pooled.size());
        } else if (pooled.size() != d.features.cols()) {
            fail_data("emb_dim_mismatch",
                      "embedding dim " + std::to_string(pooled.size()) + " for id " + rows[i].id +
                          " differs from first row's " + std::to_string(d.features.cols()));
        }
        std::copy(pooled.begin(), pooled.end(), d.features.row(i));
        d.labels.push_back(d.vocab.require(rows[i].label));
        d.ids.push_back(rows[i].id);
        d.corpus_tags.push_back(rows[i].corpus);
    }
    d.validate();
    return d;
}

}  // namespace pathovox

#endif
