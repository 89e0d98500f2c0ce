#ifndef PATHOVOX_WAV_HPP
#define PATHOVOX_WAV_HPP

// Mono PCM-16 RIFF/WAVE reader and writer. Samples live in [-1, 1) as
// value/32768; writing rounds half away from zero and clamps.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pathovox/core.hpp"

namespace pathovox {

struct Waveform {
    std::vector<double> samples;
    std::uint32_t sample_rate = 0;
};

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline std::uint16_t read_u16(std::istream& in) {
    std::uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}

}  // namespace detail

inline Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_data("wav_io", "cannot open wav: " + path);

    char tag[4];
    if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0)
        fail_data("wav_bad_riff", "missing RIFF header: " + path);
    detail::read_u32(in);  // overall size; chunk walk below is authoritative
    if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0)
        fail_data("wav_bad_riff", "missing WAVE form type: " + path);

    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0, codec = 0;
    std::uint32_t rate = 0;
    Waveform w;

    while (in.read(tag, 4)) {
        std::uint32_t size = detail::read_u32(in);
        if (!in) fail_data("wav_truncated", "chunk header cut short: " + path);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) fail_data("wav_truncated", "fmt chunk too small: " + path);
            codec = detail::read_u16(in);
            channels = detail::read_u16(in);
            rate = detail::read_u32(in);
            detail::read_u32(in);  // byte rate
            detail::read_u16(in);  // block align
            bits = detail::read_u16(in);
            in.ignore(size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) fail_data("wav_missing_fmt", "data chunk before fmt: " + path);
            if (codec != 1) fail_data("wav_unsupported_codec", "only PCM supported: " + path);
            if (channels != 1)
                fail_data("wav_unsupported_channels",
                          "unsupported channels (" + std::to_string(channels) + "), need mono: " + path);
            if (bits != 16)
                fail_data("wav_unsupported_depth",
                          "unsupported bit depth (" + std::to_string(bits) + "), need 16: " + path);
            if (rate == 0) fail_data("wav_bad_rate", "zero sample rate: " + path);
            if (size % 2 != 0) fail_data("wav_truncated", "odd data chunk size: " + path);
            std::vector<std::int16_t> pcm(size / 2);
            if (!in.read(reinterpret_cast<char*>(pcm.data()), size))
                fail_data("wav_truncated", "data chunk cut short: " + path);
            w.sample_rate = rate;
            w.samples.resize(pcm.size());
            for (std::size_t i = 0; i < pcm.size(); ++i)
                w.samples[i] = static_cast<double>(pcm[i]) / 32768.0;
            if (w.samples.empty()) fail_data("wav_empty", "wav has no samples: " + path);
            return w;
        } else {
            in.ignore(size + (size % 2));  // unknown chunk, padded to even size
        }
    }
    fail_data("wav_missing_data", "no data chunk found: " + path);
}

inline std::int16_t quantize_sample(double v) {
    double scaled = v * 32768.0;
    double rounded = scaled >= 0.0 ? std::floor(scaled + 0.5) : std::ceil(scaled - 0.5);
    if (rounded > 32767.0) rounded = 32767.0;
    if (rounded < -32768.0) rounded = -32768.0;
    return static_cast<std::int16_t>(rounded);
}

inline void write_wav(const Waveform& w, const std::string& path) {
    if (w.samples.empty()) fail_data("wav_empty", "refusing to write empty waveform");
    if (w.sample_rate == 0) fail_data("wav_bad_rate", "refusing to write zero sample rate");
    for (double s : w.samples)
        if (!std::isfinite(s)) fail_numeric("wav_nonfinite", "non-finite sample in waveform");

    std::ofstream out(path, std::ios::binary);
    if (!out) fail_data("wav_io", "cannot write wav: " + path);

    const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
    const std::uint32_t riff_size = 36 + data_size;
    const std::uint16_t channels = 1, codec = 1, bits = 16;
    const std::uint32_t byte_rate = w.sample_rate * 2;
    const std::uint16_t block_align = 2;
    const std::uint32_t fmt_size = 16;

    auto put = [&](const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); };
    put("RIFF", 4);
    put(&riff_size, 4);
    put("WAVE", 4);
    put("fmt ", 4);
    put(&fmt_size, 4);
    put(&codec, 2);
    put(&channels, 2);
    put(&w.sample_rate, 4);
    put(&byte_rate, 4);
    put(&block_align, 2);
    put(&bits, 2);
    put("data", 4);
    put(&data_size, 4);
    std::vector<std::int16_t> pcm(w.samples.size());
    for (std::size_t i = 0; i < pcm.size(); ++i) pcm[i] = quantize_sample(w.samples[i]);
    put(pcm.data(), data_size);
    if (!out) fail_data("wav_io", "write failed: " + path);
}

}  // namespace pathovox

#endif
