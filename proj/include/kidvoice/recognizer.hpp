#pragma once

// Isolated-word classification: banded DTW template matching, unigram-weighted
// N-best ranking, VTLN warp search, rejection and the feedback path that files
// rejected input in the speech database.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kidvoice/association.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/features.hpp"
#include "kidvoice/language_model.hpp"
#include "kidvoice/vocabulary.hpp"

namespace kidvoice {

struct DecoderConfig {
    double lambda = 1.0;         ///< LM weight
    double tau = 8.0;            ///< reject when best combined score exceeds this
    double band_fraction = 0.2;  ///< Sakoe-Chiba half-width / longer length
    std::size_t n_best = 5;
    bool vtln_search = false;

    void validate() const {
        if (!(lambda >= 0.0)) throw Error(Errc::BadConfig, "lambda must be >= 0");
        if (!(band_fraction >= 0.0)) throw Error(Errc::BadConfig, "band_fraction must be >= 0");
        if (n_best < 1) throw Error(Errc::BadConfig, "n_best must be >= 1");
        if (std::isnan(tau)) throw Error(Errc::BadConfig, "tau is NaN");
    }
};

/// Band half-width: max(ceil(fraction * max(n, m)), |n - m| + 1), so the end
/// cell is always reachable.
inline std::size_t dtw_band_width(std::size_t n, std::size_t m, double band_fraction) {
    const auto longer = static_cast<double>(std::max(n, m));
    const auto base = static_cast<std::size_t>(std::ceil(band_fraction * longer - 1e-12));
    const std::size_t diff = n > m ? n - m : m - n;
    return std::max(base, diff + 1);
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Accumulated local Euclidean cost of the best monotone alignment with steps
/// (1,0), (0,1), (1,1), restricted to |i - j| <= band width, divided by n + m.
inline double dtw_distance(const Matrix& a, const Matrix& b, double band_fraction) {
    if (a.rows() == 0 || b.rows() == 0) throw Error(Errc::EmptySequence, "DTW needs non-empty sequences");
    if (a.cols() != b.cols())
        throw Error(Errc::DimMismatch, std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + " coefficients");
    const std::size_t n = a.rows(), m = b.rows();
    const std::size_t w = dtw_band_width(n, m, band_fraction);
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m, inf), cur(m, inf);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(cur.begin(), cur.end(), inf);
        const std::size_t j_lo = i > w ? i - w : 0;
        const std::size_t j_hi = std::min(m - 1, i + w);
        for (std::size_t j = j_lo; j <= j_hi; ++j) {
            const double local = euclidean(a.row(i), b.row(j));
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = inf;
                if (i > 0) best = std::min(best, prev[j]);
                if (j > 0) best = std::min(best, cur[j - 1]);
                if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
            }
            cur[j] = best + local;
        }
        std::swap(prev, cur);
    }
    return prev[m - 1] / static_cast<double>(n + m);
}

inline double dtw_distance(const FeatureMatrix& a, const FeatureMatrix& b, double band_fraction) {
    return dtw_distance(a.vectors, b.vectors, band_fraction);
}

struct Template {
    std::string word;
    std::string speaker_id;
    std::string utterance_id;
    FeatureMatrix features;
    double warp_alpha = 1.0;
};

/// In-memory enrolled templates grouped by word.
class TemplateStore {
public:
    explicit TemplateStore(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

    const Template& enroll(Template t) {
        if (!lexicon_.contains(t.word)) throw Error(Errc::UnknownWord, "'" + t.word + "' is not in the lexicon");
        if (t.features.n_frames() == 0) throw Error(Errc::EmptySequence, "template has no frames");
        ++size_;
        auto& bucket = by_word_[t.word];
        bucket.push_back(std::move(t));
        return bucket.back();
    }

    std::size_t count(const std::string& word) const {
        auto it = by_word_.find(word);
        return it == by_word_.end() ? 0 : it->second.size();
    }
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    const Lexicon& lexicon() const { return lexicon_; }
    const std::map<std::string, std::vector<Template>>& by_word() const { return by_word_; }

private:
    Lexicon lexicon_;
    std::map<std::string, std::vector<Template>> by_word_;
    std::size_t size_ = 0;
};

inline const Template& enroll_template(FeatureMatrix features, const std::string& word, const std::string& speaker_id,
                                       TemplateStore& db) {
    std::string utt = features.utterance_id;
    return db.enroll(Template{word, speaker_id, std::move(utt), std::move(features), 1.0});
}

struct Hypothesis {
    std::string word;
    double acoustic_cost = 0.0;
    double lm_logprob = 0.0;
    double combined_score = 0.0;  ///< acoustic_cost - lambda * lm_logprob, lower is better
    double best_warp = 1.0;
};

struct NBestList {
    std::vector<Hypothesis> hypotheses;
    bool rejected = false;

    const Hypothesis* top() const { return hypotheses.empty() ? nullptr : &hypotheses.front(); }
};

/// Scores one word given all of its templates. DTW is the default backend;
/// other acoustic models plug in here.
class WordScorer {
public:
    virtual ~WordScorer() = default;
    virtual double score(const FeatureMatrix& input, std::span<const Template> templates) const = 0;
};

class DtwScorer final : public WordScorer {
public:
    explicit DtwScorer(double band_fraction) : band_fraction_(band_fraction) {}

    double score(const FeatureMatrix& input, std::span<const Template> templates) const override {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : templates) best = std::min(best, dtw_distance(input, t.features, band_fraction_));
        return best;
    }

private:
    double band_fraction_;
};

/// The input utterance re-extracted at one VTLN warp factor.
struct WarpedFeatures {
    double warp = 1.0;
    FeatureMatrix features;
};

/// Ranks every enrolled word. `candidates` holds the input at each warp to
/// try; the acoustic cost of a word is its minimum over candidates.
inline NBestList recognize(std::span<const WarpedFeatures> candidates, const TemplateStore& db,
                           const UnigramModel& lm, const DecoderConfig& cfg, const WordScorer& scorer) {
    cfg.validate();
    if (db.empty()) throw Error(Errc::EmptyTemplateStore, "no templates enrolled");
    if (candidates.empty()) throw Error(Errc::EmptySequence, "no input features");

    NBestList out;
    for (const auto& [word, templates] : db.by_word()) {
        Hypothesis h;
        h.word = word;
        h.acoustic_cost = std::numeric_limits<double>::infinity();
        for (const auto& cand : candidates) {
            const double d = scorer.score(cand.features, templates);
            if (d < h.acoustic_cost) {
                h.acoustic_cost = d;
                h.best_warp = cand.warp;
            }
        }
        h.lm_logprob = lm.log_prob(word);
        h.combined_score = h.acoustic_cost - cfg.lambda * h.lm_logprob;
        out.hypotheses.push_back(std::move(h));
    }
    std::sort(out.hypotheses.begin(), out.hypotheses.end(), [](const Hypothesis& a, const Hypothesis& b) {
        return a.combined_score != b.combined_score ? a.combined_score < b.combined_score : a.word < b.word;
    });
    if (out.hypotheses.size() > cfg.n_best) out.hypotheses.resize(cfg.n_best);
    out.rejected = out.hypotheses.front().combined_score > cfg.tau;
    return out;
}

inline NBestList recognize(std::span<const WarpedFeatures> candidates, const TemplateStore& db,
                           const UnigramModel& lm, const DecoderConfig& cfg) {
    return recognize(candidates, db, lm, cfg, DtwScorer(cfg.band_fraction));
}

inline NBestList recognize(const FeatureMatrix& features, const TemplateStore& db, const UnigramModel& lm,
                           const DecoderConfig& cfg) {
    const WarpedFeatures only{1.0, features};
    return recognize(std::span(&only, 1), db, lm, cfg);
}

using AssociationHook = std::function<void(const AssociationEntry&)>;

/// Files a rejected result in the database under its top hypothesis and the
/// dialog context it arrived in, then notifies `on_event` (LM adaptation).
template <AssociationRecorder Store>
AssociationEntry feedback_unrecognized(const std::string& utterance_id, const NBestList& nbest,
                                       const std::string& context, Store& store,
                                       const AssociationHook& on_event = {}) {
    if (!nbest.rejected) throw Error(Errc::NotRejected, "feedback is only filed for rejected results");
    if (nbest.hypotheses.empty()) throw Error(Errc::EmptySequence, "rejected list has no hypotheses");
    AssociationEntry entry = store.record_association(utterance_id, nbest.hypotheses.front().word, context);
    if (on_event) on_event(entry);
    return entry;
}

}  // namespace kidvoice
