#ifndef PATHOVOX_TEST_HELPERS_HPP
#define PATHOVOX_TEST_HELPERS_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        auto base = std::filesystem::temp_directory_path();
        path_ = base / ("pathovox-test-" + std::to_string(rd()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Gaussian class blobs: counts[k] rows around means.row(k) with per-class
// isotropic spread stds[k]. Labels follow the row order of `means`.
inline Dataset make_blobs(const Matrix& means, const std::vector<double>& stds,
                          const std::vector<std::size_t>& counts, const Vocabulary& vocab,
                          Rng& rng) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    Dataset d;
    d.features = Matrix(total, means.cols());
    d.labels.reserve(total);
    d.vocab = vocab;
    std::size_t r = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (std::size_t i = 0; i < counts[k]; ++i, ++r) {
            for (std::size_t c = 0; c < means.cols(); ++c)
                d.features.at(r, c) = means.at(k, c) + stds[k] * rng.gaussian();
            d.labels.push_back(static_cast<int>(k));
        }
    }
    d.validate();
    return d;
}

}  // namespace pathovox::testing

#endif
