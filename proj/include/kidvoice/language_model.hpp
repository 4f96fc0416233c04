#pragma once

// Add-one smoothed unigram priors over the lexicon plus one reserved UNK
// pseudo-word:  P(w) = (c_w + 1) / (total + |V| + 1).

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/association.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/vocabulary.hpp"

namespace kidvoice {

inline constexpr const char* kUnkToken = "<unk>";

class UnigramModel {
public:
    UnigramModel() = default;
    UnigramModel(std::vector<std::string> vocab, std::map<std::string, std::int64_t> counts,
                 std::int64_t smoothing = 1)
        : vocab_(std::move(vocab)), counts_(std::move(counts)), smoothing_(smoothing) {
        if (vocab_.empty()) throw Error(Errc::EmptyLexicon, "unigram model needs a non-empty vocabulary");
        if (smoothing_ < 1) throw Error(Errc::BadConfig, "smoothing constant must be >= 1");
        for (const auto& w : vocab_) {
            auto& c = counts_[w];
            if (c < 0) throw Error(Errc::BadConfig, "negative count for " + w);
        }
        if (counts_.size() != vocab_.size())
            throw Error(Errc::BadConfig, "counts reference words outside the vocabulary");
        total_ = 0;
        for (const auto& [w, c] : counts_) total_ += c;
    }

    const std::vector<std::string>& vocab() const { return vocab_; }
    const std::map<std::string, std::int64_t>& counts() const { return counts_; }
    std::int64_t total() const { return total_; }
    std::int64_t smoothing() const { return smoothing_; }
    bool contains(const std::string& word) const { return counts_.count(word) != 0; }

    double denominator() const {
        return static_cast<double>(total_ + smoothing_ * (static_cast<std::int64_t>(vocab_.size()) + 1));
    }

    double prob(const std::string& word) const {
        auto it = counts_.find(word);
        const std::int64_t c = it == counts_.end() ? 0 : it->second;
        return static_cast<double>(c + smoothing_) / denominator();
    }
    double unk_prob() const { return static_cast<double>(smoothing_) / denominator(); }

    /// Natural log of P(word); out-of-vocabulary words get P(UNK).
    double log_prob(const std::string& word) const { return std::log(prob(word)); }

private:
    std::vector<std::string> vocab_;
    std::map<std::string, std::int64_t> counts_;
    std::int64_t total_ = 0;
    std::int64_t smoothing_ = 1;
};

inline double log_prob(const UnigramModel& model, const std::string& word) { return model.log_prob(word); }

/// Lexicon words missing from the dictionary get count 0.
inline UnigramModel train_unigram(const FrequencyDictionary& dict, const Lexicon& lexicon) {
    if (lexicon.empty()) throw Error(Errc::EmptyLexicon, "cannot train on an empty lexicon");
    std::map<std::string, std::int64_t> counts;
    for (const auto& w : lexicon.words()) counts[w] = dict.count_of(w).value_or(0);
    return UnigramModel(lexicon.words(), std::move(counts));
}

/// Returns a new model whose keyword counts include the association counts.
inline UnigramModel adapt_with_associations(const UnigramModel& model, std::span<const AssociationEntry> assoc) {
    auto counts = model.counts();
    for (const auto& a : assoc) {
        auto it = counts.find(a.keyword);
        if (it == counts.end()) throw Error(Errc::UnknownKeyword, "'" + a.keyword + "' is not in the LM vocabulary");
        it->second += a.count;
    }
    return UnigramModel(model.vocab(), std::move(counts), model.smoothing());
}

inline nlohmann::json unigram_to_json(const UnigramModel& m) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [w, c] : m.counts()) counts[w] = c;
    return {{"format", "kidvoice-unigram"}, {"version", 1}, {"vocab", m.vocab()},
            {"counts", counts}, {"smoothing", m.smoothing()}};
}

inline UnigramModel unigram_from_json(const nlohmann::json& j) {
    try {
        return UnigramModel(j.at("vocab").get<std::vector<std::string>>(),
                            j.at("counts").get<std::map<std::string, std::int64_t>>(),
                            j.value("smoothing", std::int64_t{1}));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("language model: ") + ex.what());
    }
}

}  // namespace kidvoice
