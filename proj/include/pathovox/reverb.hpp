#ifndef PATHOVOX_REVERB_HPP
#define PATHOVOX_REVERB_HPP

// Reverberation of a speech corpus by RIR convolution. Full linear
// convolution with no loudness renormalization: the RIR is deliberately
// scaled to dominate, and clipping only happens at 16-bit write time.

#include <algorithm>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "pathovox/core.hpp"
#include "pathovox/manifest.hpp"
#include "pathovox/wav.hpp"

namespace pathovox {

struct Rir {
    std::vector<double> taps;
    std::uint32_t sample_rate = 0;
};

inline Rir scale_rir(const Rir& r, double factor) {
    if (!std::isfinite(factor)) fail_config("rir_bad_factor", "non-finite RIR scale factor");
    Rir out{r.taps, r.sample_rate};
    for (double& t : out.taps) t *= factor;
    return out;
}

namespace detail {

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double pi = 3.14159265358979323846;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

inline std::vector<double> convolve_direct(const std::vector<double>& x,
                                           const std::vector<double>& h) {
    std::vector<double> y(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        for (std::size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
    }
    return y;
}

inline std::vector<double> convolve_fft(const std::vector<double>& x,
                                        const std::vector<double>& h) {
    const std::size_t out_len = x.size() + h.size() - 1;
    std::size_t n = 1;
    while (n < out_len) n <<= 1;
    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < x.size(); ++i) fa[i] = x[i];
    for (std::size_t i = 0; i < h.size(); ++i) fb[i] = h[i];
    detail::fft_inplace(fa, false);
    detail::fft_inplace(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    detail::fft_inplace(fa, true);
    std::vector<double> y(out_len);
    for (std::size_t i = 0; i < out_len; ++i) y[i] = fa[i].real();
    return y;
}

// Full linear convolution; output length len(w) + len(r) - 1. The method is
// picked from the input sizes alone, so results are reproducible run to run.
inline Waveform convolve(const Waveform& w, const Rir& r) {
    if (w.samples.empty() || r.taps.empty())
        fail_data("convolve_empty", "convolution with empty signal or RIR");
    if (w.sample_rate != r.sample_rate)
        fail_data("convolve_rate_mismatch",
                  "waveform at " + std::to_string(w.sample_rate) + " Hz but RIR at " +
                      std::to_string(r.sample_rate) + " Hz");
    Waveform out;
    out.sample_rate = w.sample_rate;
    if (w.samples.size() * r.taps.size() <= (1u << 20))
        out.samples = convolve_direct(w.samples, r.taps);
    else
        out.samples = convolve_fft(w.samples, r.taps);
    return out;
}

// RIR bank: every .wav directly inside `rir_dir`, sorted by filename.
inline std::vector<std::string> list_rir_bank(const std::string& rir_dir) {
    std::error_code ec;
    std::filesystem::directory_iterator it(rir_dir, ec);
    if (ec) fail_data("rir_bank_io", "cannot list RIR directory: " + rir_dir);
    std::vector<std::string> files;
    for (const auto& entry : it)
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) fail_data("rir_bank_empty", "no .wav files in RIR directory: " + rir_dir);
    return files;
}

struct AugmentResult {
    std::vector<ManifestRow> manifest;
    std::vector<std::size_t> rir_choice;  // bank index per utterance
};

// Reverberate a corpus. Source audio is <audio_dir>/<id>.wav; outputs land in
// <out_dir>/<id>.wav. `out_emb_template` names where embeddings of the
// reverberated audio will live once re-extracted; it must keep the {layer}
// placeholder and use {id} for the per-utterance part. The RIR for utterance
// i comes from the fork(i) stream, so any execution order gives the same
// assignment. RIRs are scaled by `rir_gain` (the reproduced setting is 2).
inline AugmentResult augment_corpus(const std::vector<ManifestRow>& rows,
                                    const std::string& audio_dir, const std::string& rir_dir,
                                    std::uint64_t seed, const std::string& out_dir,
                                    const std::string& out_emb_template, double rir_gain = 2.0) {
    if (rows.empty()) fail_data("manifest_no_rows", "nothing to augment");
    if (out_emb_template.find("{layer}") == std::string::npos)
        fail_config("augment_bad_template", "output embedding template lacks {layer}");
    if (rows.size() > 1 && out_emb_template.find("{id}") == std::string::npos)
        fail_config("augment_bad_template",
                    "output embedding template needs {id} to keep utterances distinct");

    auto bank_paths = list_rir_bank(rir_dir);
    std::vector<Rir> bank;
    bank.reserve(bank_paths.size());
    for (const auto& p : bank_paths) {
        Waveform rw = read_wav(p);
        bank.push_back(Rir{std::move(rw.samples), rw.sample_rate});
    }

    std::filesystem::create_directories(out_dir);
    Rng root(seed);
    AugmentResult res;
    res.manifest.reserve(rows.size());
    res.rir_choice.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::size_t pick =
            static_cast<std::size_t>(root.fork(i).below(static_cast<std::uint64_t>(bank.size())));
        res.rir_choice.push_back(pick);

        auto src = (std::filesystem::path(audio_dir) / (row.id + ".wav")).string();
        Waveform w = read_wav(src);
        Waveform rev = convolve(w, scale_rir(bank[pick], rir_gain));
        auto dst = (std::filesystem::path(out_dir) / (row.id + ".wav")).string();
        write_wav(rev, dst);

        std::string tmpl = out_emb_template;
        for (std::size_t pos = tmpl.find("{id}"); pos != std::string::npos;
             pos = tmpl.find("{id}", pos))
            tmpl.replace(pos, 4, row.id);
        res.manifest.push_back({row.id, row.label, row.corpus + "-REV", tmpl});
    }
    return res;
}

}  // namespace pathovox

#endif
