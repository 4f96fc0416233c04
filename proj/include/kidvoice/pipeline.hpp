#pragma once

// Audio -> features composition used by enrollment, evaluation and the
// service: pre-emphasis, framing, magnitude spectrum, optional spectral
// subtraction, warped mel filterbank, log + DCT, optional CMN.

#include <map>
#include <vector>

#include "kidvoice/audio.hpp"
#include "kidvoice/features.hpp"
#include "kidvoice/recognizer.hpp"

namespace kidvoice {

class FrontEnd {
public:
    explicit FrontEnd(PreprocessConfig pre = {}, FeatureConfig feat = {})
        : pre_(std::move(pre)), feat_(std::move(feat)) {
        pre_.validate();
        feat_.validate();
        filterbanks_.emplace(1.0, build_mel_filterbank(feat_, 1.0));
        for (double w : feat_.vtln_grid) filterbanks_.try_emplace(w, build_mel_filterbank(feat_, w));
    }

    const PreprocessConfig& preprocess_config() const { return pre_; }
    const FeatureConfig& feature_config() const { return feat_; }

    /// Denoised magnitude spectra, shared by every warp.
    Matrix spectra(const AudioBuffer& audio) const {
        const auto frames = frame_signal(pre_emphasize(audio, pre_.preemph_alpha), pre_);
        if (feat_.n_fft < frames.frame_len) throw Error(Errc::ShapeMismatch, "n_fft smaller than frame length");
        return spectral_subtract(magnitude_spectra(frames.frames, feat_.n_fft), pre_);
    }

    FeatureMatrix features_from_spectra(const Matrix& mag, double warp) const {
        auto it = filterbanks_.find(warp);
        auto f = it != filterbanks_.end() ? mfcc_from_magnitudes(mag, it->second, feat_)
                                          : mfcc_from_magnitudes(mag, build_mel_filterbank(feat_, warp), feat_);
        return feat_.cmn_enabled ? cepstral_mean_normalize(f) : f;
    }

    FeatureMatrix features(const AudioBuffer& audio, double warp = 1.0) const {
        return features_from_spectra(spectra(audio), warp);
    }

    /// The input at warp 1.0 only, or at every grid warp when searching.
    std::vector<WarpedFeatures> candidates(const AudioBuffer& audio, bool vtln_search) const {
        const Matrix mag = spectra(audio);
        std::vector<WarpedFeatures> out;
        if (!vtln_search) {
            out.push_back({1.0, features_from_spectra(mag, 1.0)});
        } else {
            for (double w : feat_.vtln_grid) out.push_back({w, features_from_spectra(mag, w)});
        }
        return out;
    }

private:
    PreprocessConfig pre_;
    FeatureConfig feat_;
    std::map<double, MelFilterbank> filterbanks_;
};

}  // namespace kidvoice
