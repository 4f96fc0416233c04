#pragma once

// MFCC front end with a linear VTLN frequency warp folded into the mel
// filterbank, plus cepstral mean normalization and the binary feature
// container used for template storage.

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "kidvoice/audio.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/matrix.hpp"

namespace kidvoice {

inline std::vector<double> default_vtln_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back((80 + 2 * i) / 100.0);
    return grid;
}

struct FeatureConfig {
    std::size_t n_fft = 512;
    std::size_t n_filters = 26;
    std::size_t n_coeffs = 13;
    double fmin = 0.0;
    double fmax = 8000.0;
    double log_floor = 1e-10;
    bool cmn_enabled = true;
    std::vector<double> vtln_grid = default_vtln_grid();

    void validate(int sample_rate = kCanonicalRate) const {
        if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
            throw Error(Errc::BadConfig, "need 0 <= fmin < fmax <= sample_rate/2");
        if (n_filters < 1 || n_coeffs < 1 || n_coeffs > n_filters)
            throw Error(Errc::BadConfig, "need 1 <= n_coeffs <= n_filters");
        if (n_fft < 2) throw Error(Errc::BadConfig, "n_fft too small");
        if (!(log_floor > 0.0)) throw Error(Errc::BadConfig, "log_floor must be positive");
    }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
    Matrix weights;  ///< n_filters x (n_fft/2 + 1)
    std::size_t n_fft = 0;
    int sample_rate = kCanonicalRate;
    double warp_alpha = 1.0;
    std::vector<double> mel_points;  ///< n_filters + 2 edge/center points, mel

    std::size_t n_filters() const { return weights.rows(); }
    std::size_t n_bins() const { return weights.cols(); }
    double bin_hz(std::size_t k) const { return static_cast<double>(k) * sample_rate / n_fft; }
};

/// Triangular mel filterbank. Filter i peaks at mel_points[i+1] and falls to
/// zero at its neighbours; bin k is placed at the warped frequency
/// warp_alpha * f_k before mel conversion.
inline MelFilterbank build_mel_filterbank(const FeatureConfig& cfg, double warp_alpha = 1.0,
                                          int sample_rate = kCanonicalRate) {
    cfg.validate(sample_rate);
    if (!(warp_alpha >= 0.8 - 1e-12 && warp_alpha <= 1.2 + 1e-12))
        throw Error(Errc::BadConfig, "warp_alpha outside [0.8, 1.2]");

    MelFilterbank fb;
    fb.n_fft = cfg.n_fft;
    fb.sample_rate = sample_rate;
    fb.warp_alpha = warp_alpha;
    const std::size_t n_bins = cfg.n_fft / 2 + 1;
    fb.weights = Matrix(cfg.n_filters, n_bins);

    const double lo = hz_to_mel(cfg.fmin);
    const double hi = hz_to_mel(cfg.fmax);
    const auto n_points = cfg.n_filters + 2;
    fb.mel_points.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        fb.mel_points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);

    for (std::size_t k = 0; k < n_bins; ++k) {
        const double m = hz_to_mel(warp_alpha * fb.bin_hz(k));
        for (std::size_t i = 0; i < cfg.n_filters; ++i) {
            const double left = fb.mel_points[i];
            const double center = fb.mel_points[i + 1];
            const double right = fb.mel_points[i + 2];
            double w = 0.0;
            if (m >= left && m <= center)
                w = (m - left) / (center - left);
            else if (m > center && m < right)
                w = (right - m) / (right - center);
            fb.weights(i, k) = w;
        }
    }
    return fb;
}

/// Orthonormal DCT-II basis, n x n: M[k][j] = s_k cos(pi k (2j+1) / 2n).
inline Matrix dct_matrix(std::size_t n) {
    Matrix m(n, n);
    const double n_d = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / n_d) : std::sqrt(2.0 / n_d);
        for (std::size_t j = 0; j < n; ++j)
            m(k, j) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                       (2.0 * static_cast<double>(j) + 1.0) / (2.0 * n_d));
    }
    return m;
}

struct FeatureMatrix {
    Matrix vectors;  ///< n_frames x n_coeffs
    std::string utterance_id;

    std::size_t n_frames() const { return vectors.rows(); }
    std::size_t n_coeffs() const { return vectors.cols(); }
};

namespace detail {

// FFTW's planner is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// |FFT| of each frame zero-padded to n_fft; bins 0..n_fft/2.
inline Matrix magnitude_spectra(const Matrix& frames, std::size_t n_fft) {
    if (frames.cols() > n_fft)
        throw Error(Errc::ShapeMismatch, "frame length " + std::to_string(frames.cols()) + " exceeds n_fft " +
                                             std::to_string(n_fft));
    const std::size_t n_bins = n_fft / 2 + 1;
    std::vector<double> in(n_fft);
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n_bins));
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), in.data(), out, FFTW_ESTIMATE);
    }
    Matrix mag(frames.rows(), n_bins);
    for (std::size_t t = 0; t < frames.rows(); ++t) {
        std::fill(in.begin(), in.end(), 0.0);
        const auto row = frames.row(t);
        std::copy(row.begin(), row.end(), in.begin());
        fftw_execute(plan);
        for (std::size_t k = 0; k < n_bins; ++k) mag(t, k) = std::hypot(out[k][0], out[k][1]);
    }
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    return mag;
}

/// First n_coeffs rows of the orthonormal DCT-II applied to log energies.
inline std::vector<double> dct_cepstrum(std::span<const double> log_energy, const Matrix& dct, std::size_t n_coeffs) {
    std::vector<double> c(n_coeffs, 0.0);
    for (std::size_t k = 0; k < n_coeffs; ++k)
        for (std::size_t i = 0; i < log_energy.size(); ++i) c[k] += dct(k, i) * log_energy[i];
    return c;
}

/// Filterbank, floored natural log, orthonormal DCT-II truncated to n_coeffs.
inline FeatureMatrix mfcc_from_magnitudes(const Matrix& mag, const MelFilterbank& fb, const FeatureConfig& cfg) {
    if (mag.cols() != fb.n_bins())
        throw Error(Errc::ShapeMismatch, "spectrum has " + std::to_string(mag.cols()) + " bins, filterbank " +
                                             std::to_string(fb.n_bins()));
    if (cfg.n_coeffs > fb.n_filters()) throw Error(Errc::BadConfig, "n_coeffs exceeds n_filters");
    const Matrix dct = dct_matrix(fb.n_filters());
    FeatureMatrix feat{Matrix(mag.rows(), cfg.n_coeffs), {}};
    std::vector<double> log_energy(fb.n_filters());
    for (std::size_t t = 0; t < mag.rows(); ++t) {
        const auto spec = mag.row(t);
        for (std::size_t i = 0; i < fb.n_filters(); ++i) {
            const auto w = fb.weights.row(i);
            double e = 0.0;
            for (std::size_t k = 0; k < spec.size(); ++k) e += w[k] * spec[k];
            log_energy[i] = std::log(std::max(e, cfg.log_floor));
        }
        const auto c = dct_cepstrum(log_energy, dct, cfg.n_coeffs);
        std::copy(c.begin(), c.end(), feat.vectors.row(t).begin());
    }
    return feat;
}

inline FeatureMatrix extract_mfcc(const FrameSequence& frames, const MelFilterbank& fb, const FeatureConfig& cfg) {
    if (fb.n_fft < frames.frame_len)
        throw Error(Errc::ShapeMismatch, "filterbank n_fft smaller than frame length");
    return mfcc_from_magnitudes(magnitude_spectra(frames.frames, fb.n_fft), fb, cfg);
}

inline FeatureMatrix cepstral_mean_normalize(const FeatureMatrix& feat) {
    FeatureMatrix out = feat;
    const std::size_t n = feat.n_frames();
    if (n == 0) return out;
    for (std::size_t c = 0; c < feat.n_coeffs(); ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) mean += feat.vectors(t, c);
        mean /= static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) out.vectors(t, c) -= mean;
    }
    return out;
}

// Binary feature container, little-endian:
//   bytes 0..3   magic "KVFM"
//   bytes 4..7   uint32 version (1)
//   bytes 8..15  uint64 rows
//   bytes 16..23 uint64 cols
//   then rows*cols IEEE-754 float64, row-major
inline constexpr char kFeatureMagic[4] = {'K', 'V', 'F', 'M'};

inline std::vector<std::uint8_t> serialize_features(const Matrix& m) {
    static_assert(std::endian::native == std::endian::little, "container writer assumes little-endian host");
    std::vector<std::uint8_t> out(24 + m.data().size() * 8);
    std::memcpy(out.data(), kFeatureMagic, 4);
    const std::uint32_t version = 1;
    const std::uint64_t rows = m.rows(), cols = m.cols();
    std::memcpy(out.data() + 4, &version, 4);
    std::memcpy(out.data() + 8, &rows, 8);
    std::memcpy(out.data() + 16, &cols, 8);
    if (!m.data().empty()) std::memcpy(out.data() + 24, m.data().data(), m.data().size() * 8);
    return out;
}

inline Matrix deserialize_features(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 24 || std::memcmp(bytes.data(), kFeatureMagic, 4) != 0)
        throw Error(Errc::ParseError, "not a feature container");
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&rows, bytes.data() + 8, 8);
    std::memcpy(&cols, bytes.data() + 16, 8);
    if (version != 1) throw Error(Errc::ParseError, "unsupported container version " + std::to_string(version));
    if (cols != 0 && rows > (bytes.size() - 24) / 8 / cols)
        throw Error(Errc::ParseError, "container truncated");
    if (bytes.size() != 24 + rows * cols * 8) throw Error(Errc::ParseError, "container size mismatch");
    std::vector<double> data(rows * cols);
    if (!data.empty()) std::memcpy(data.data(), bytes.data() + 24, data.size() * 8);
    return Matrix(rows, cols, std::move(data));
}

}  // namespace kidvoice
