#pragma once

// Signal preprocessing front end: WAV ingestion, pre-emphasis, framing and
// magnitude-domain spectral subtraction. Everything here is a pure function
// over value inputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kidvoice/error.hpp"
#include "kidvoice/matrix.hpp"

namespace kidvoice {

inline constexpr int kCanonicalRate = 16000;

struct AudioBuffer {
    std::vector<double> samples;  ///< amplitudes in [-1, 1]
    int sample_rate = kCanonicalRate;

    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

struct PreprocessConfig {
    double preemph_alpha = 0.97;
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    int noise_frames = 5;
    double noise_floor_beta = 0.1;
    bool denoise_enabled = true;

    void validate() const {
        if (!(preemph_alpha >= 0.0 && preemph_alpha < 1.0))
            throw Error(Errc::BadConfig, "preemph_alpha must lie in [0, 1)");
        if (!(noise_floor_beta > 0.0 && noise_floor_beta < 1.0))
            throw Error(Errc::BadConfig, "noise_floor_beta must lie in (0, 1)");
        if (noise_frames < 1) throw Error(Errc::BadConfig, "noise_frames must be >= 1");
        if (!(hop_ms > 0.0 && frame_ms > hop_ms))
            throw Error(Errc::BadConfig, "need frame_ms > hop_ms > 0");
    }
};

struct FrameSequence {
    Matrix frames;  ///< n_frames x frame_len, windowed
    std::size_t frame_len = 0;
    std::size_t hop = 0;
    int sample_rate = kCanonicalRate;

    std::size_t n_frames() const { return frames.rows(); }
};

namespace detail {

inline std::uint32_t read_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t read_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace detail

/// Linear-interpolation resampler. Output length is floor(n * to / from).
inline std::vector<double> resample_linear(std::span<const double> in, int from_rate, int to_rate) {
    if (from_rate == to_rate) return {in.begin(), in.end()};
    const auto n = static_cast<std::uint64_t>(in.size());
    const std::uint64_t out_len = n * static_cast<std::uint64_t>(to_rate) / from_rate;
    std::vector<double> out(out_len);
    for (std::uint64_t i = 0; i < out_len; ++i) {
        // exact rational source position i * from / to
        const std::uint64_t num = i * static_cast<std::uint64_t>(from_rate);
        const std::uint64_t i0 = num / to_rate;
        const double frac = static_cast<double>(num % to_rate) / to_rate;
        const double a = in[i0];
        const double b = (i0 + 1 < n) ? in[i0 + 1] : a;
        out[i] = a + frac * (b - a);
    }
    return out;
}

/// Parses a RIFF/WAVE file holding 16-bit mono PCM at 16, 44.1 or 48 kHz and
/// returns it at the canonical 16 kHz rate.
inline AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
    using detail::read_u16le;
    using detail::read_u32le;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw Error(Errc::CorruptHeader, "missing RIFF/WAVE signature");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = read_u32le(chunk + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) throw Error(Errc::CorruptHeader, "chunk overruns file");
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (size < 16) throw Error(Errc::CorruptHeader, "fmt chunk too short");
            format = read_u16le(bytes.data() + body);
            channels = read_u16le(bytes.data() + body + 2);
            rate = read_u32le(bytes.data() + body + 4);
            bits = read_u16le(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_fmt) throw Error(Errc::CorruptHeader, "data chunk precedes fmt chunk");
            if (format != 1) throw Error(Errc::UnsupportedFormat, "only PCM (format 1) is accepted");
            if (channels != 1)
                throw Error(Errc::UnsupportedFormat, std::to_string(channels) + " channels; mono required");
            if (bits != 16)
                throw Error(Errc::UnsupportedFormat, std::to_string(bits) + "-bit samples; 16-bit required");
            if (rate != 16000 && rate != 44100 && rate != 48000)
                throw Error(Errc::UnsupportedFormat, "sample rate " + std::to_string(rate));
            if (size % 2 != 0) throw Error(Errc::CorruptHeader, "odd data chunk length");
            std::vector<double> samples(size / 2);
            for (std::size_t i = 0; i < samples.size(); ++i) {
                const auto raw = static_cast<std::int16_t>(read_u16le(bytes.data() + body + 2 * i));
                samples[i] = raw / 32768.0;
            }
            return {resample_linear(samples, static_cast<int>(rate), kCanonicalRate), kCanonicalRate};
        }
        pos = body + size + (size & 1u);
    }
    throw Error(Errc::CorruptHeader, have_fmt ? "no data chunk" : "no fmt chunk");
}

/// Writes 16-bit mono PCM. Samples are clipped to the representable range.
inline std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate = kCanonicalRate) {
    using detail::put_u16le;
    using detail::put_u32le;
    std::vector<std::uint8_t> out;
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32le(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32le(out, 16);
    put_u16le(out, 1);
    put_u16le(out, 1);
    put_u32le(out, static_cast<std::uint32_t>(sample_rate));
    put_u32le(out, static_cast<std::uint32_t>(sample_rate * 2));
    put_u16le(out, 2);
    put_u16le(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32le(out, data_bytes);
    for (double x : samples) {
        const double scaled = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
        put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
    return out;
}

/// y[0] = x[0], y[n] = x[n] - alpha * x[n-1].
inline AudioBuffer pre_emphasize(const AudioBuffer& buf, double alpha) {
    AudioBuffer out{std::vector<double>(buf.samples.size()), buf.sample_rate};
    for (std::size_t n = 0; n < buf.samples.size(); ++n)
        out.samples[n] = buf.samples[n] - (n > 0 ? alpha * buf.samples[n - 1] : 0.0);
    return out;
}

/// Inverse of pre_emphasize: x[n] = y[n] + alpha * x[n-1].
inline AudioBuffer de_emphasize(const AudioBuffer& buf, double alpha) {
    AudioBuffer out{std::vector<double>(buf.samples.size()), buf.sample_rate};
    for (std::size_t n = 0; n < buf.samples.size(); ++n)
        out.samples[n] = buf.samples[n] + (n > 0 ? alpha * out.samples[n - 1] : 0.0);
    return out;
}

inline double hamming(std::size_t n, std::size_t length) {
    if (length < 2) return 1.0;
    return 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                  static_cast<double>(length - 1));
}

inline std::size_t ms_to_samples(double ms, int rate) {
    const double exact = ms * rate / 1000.0;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9 || rounded < 1)
        throw Error(Errc::BadConfig, std::to_string(ms) + " ms is not a whole number of samples");
    return static_cast<std::size_t>(rounded);
}

/// Cuts the signal into Hamming-windowed frames. A trailing partial frame is
/// dropped; a signal shorter than one frame is zero-padded to one frame.
inline FrameSequence frame_signal(const AudioBuffer& buf, const PreprocessConfig& cfg) {
    cfg.validate();
    if (buf.samples.empty()) throw Error(Errc::EmptySignal, "no samples to frame");
    const std::size_t frame_len = ms_to_samples(cfg.frame_ms, buf.sample_rate);
    const std::size_t hop = ms_to_samples(cfg.hop_ms, buf.sample_rate);
    const std::size_t len = buf.samples.size();
    const std::size_t n_frames = len >= frame_len ? 1 + (len - frame_len) / hop : 1;

    std::vector<double> window(frame_len);
    for (std::size_t n = 0; n < frame_len; ++n) window[n] = hamming(n, frame_len);

    FrameSequence seq{Matrix(n_frames, frame_len), frame_len, hop, buf.sample_rate};
    for (std::size_t t = 0; t < n_frames; ++t) {
        const std::size_t start = t * hop;
        for (std::size_t n = 0; n < frame_len && start + n < len; ++n)
            seq.frames(t, n) = buf.samples[start + n] * window[n];
    }
    return seq;
}

/// Per-bin noise estimate: mean magnitude over the leading noise frames.
inline std::vector<double> estimate_noise(const Matrix& mag, int noise_frames) {
    std::vector<double> noise(mag.cols(), 0.0);
    for (int t = 0; t < noise_frames; ++t)
        for (std::size_t k = 0; k < mag.cols(); ++k) noise[k] += mag(static_cast<std::size_t>(t), k);
    for (double& v : noise) v /= noise_frames;
    return noise;
}

/// Magnitude spectral subtraction with a beta * noise floor:
/// out[t][k] = max(mag[t][k] - noise[k], beta * noise[k]).
inline Matrix spectral_subtract(const Matrix& mag, const PreprocessConfig& cfg) {
    if (!cfg.denoise_enabled) return mag;
    if (cfg.noise_frames < 1 || mag.rows() < static_cast<std::size_t>(cfg.noise_frames))
        throw Error(Errc::TooFewFrames, std::to_string(mag.rows()) + " frames, noise estimate needs " +
                                            std::to_string(cfg.noise_frames));
    const auto noise = estimate_noise(mag, cfg.noise_frames);
    Matrix out(mag.rows(), mag.cols());
    for (std::size_t t = 0; t < mag.rows(); ++t)
        for (std::size_t k = 0; k < mag.cols(); ++k)
            out(t, k) = std::max(mag(t, k) - noise[k], cfg.noise_floor_beta * noise[k]);
    return out;
}

}  // namespace kidvoice
