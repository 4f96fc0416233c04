#pragma once

// Frequency dictionary and lexicon: the vocabulary side of the speech
// database, shared by the corpus store, language model and dialog manager.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/error.hpp"

namespace kidvoice {

using Warnings = std::vector<std::string>;

struct FrequencyEntry {
    std::string word;
    std::int64_t count = 0;
};

struct FrequencyDictionary {
    std::vector<FrequencyEntry> entries;

    std::optional<std::int64_t> count_of(const std::string& word) const {
        for (const auto& e : entries)
            if (e.word == word) return e.count;
        return std::nullopt;
    }
};

/// Parses "word<TAB>count" lines. Blank lines are skipped.
inline FrequencyDictionary parse_frequency_tsv(const std::string& text) {
    FrequencyDictionary dict;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw Error(Errc::ParseError, "freq dict line " + std::to_string(line_no) + ": expected word<TAB>count");
        std::string word = line.substr(0, tab);
        std::int64_t count = 0;
        try {
            std::size_t used = 0;
            count = std::stoll(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, "freq dict line " + std::to_string(line_no) + ": bad count");
        }
        if (count < 0) throw Error(Errc::ParseError, "freq dict line " + std::to_string(line_no) + ": negative count");
        if (dict.count_of(word)) throw Error(Errc::ParseError, "freq dict: duplicate word " + word);
        dict.entries.push_back({std::move(word), count});
    }
    return dict;
}

inline std::string format_frequency_tsv(const FrequencyDictionary& dict) {
    std::string out;
    for (const auto& e : dict.entries) out += e.word + '\t' + std::to_string(e.count) + '\n';
    return out;
}

/// Lowercase, whitespace-free. Non-ASCII bytes (e.g. Cyrillic UTF-8) pass.
inline bool is_valid_token(const std::string& token) {
    if (token.empty()) return false;
    return std::none_of(token.begin(), token.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return c < 0x80 && (std::isspace(c) || std::isupper(c) || std::iscntrl(c));
    });
}

struct LexiconEntry {
    std::string word;
    std::string concept_tag;            ///< dialog concept this word fills
    std::vector<std::string> phonemes;  ///< optional pronunciation hint
};

class Lexicon {
public:
    Lexicon() = default;

    void add(LexiconEntry entry) {
        if (!is_valid_token(entry.word))
            throw Error(Errc::BadConfig, "invalid lexicon token '" + entry.word + "'");
        if (contains(entry.word)) throw Error(Errc::BadConfig, "duplicate lexicon token '" + entry.word + "'");
        if (entry.concept_tag.empty()) entry.concept_tag = entry.word;
        index_[entry.word] = entries_.size();
        entries_.push_back(std::move(entry));
    }

    bool contains(const std::string& word) const { return index_.count(word) != 0; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<LexiconEntry>& entries() const { return entries_; }

    std::vector<std::string> words() const {
        std::vector<std::string> w;
        for (const auto& e : entries_) w.push_back(e.word);
        return w;
    }

    const LexiconEntry* find(const std::string& word) const {
        auto it = index_.find(word);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    std::optional<std::string> concept_of(const std::string& word) const {
        if (const auto* e = find(word)) return e->concept_tag;
        return std::nullopt;
    }

private:
    std::vector<LexiconEntry> entries_;
    std::map<std::string, std::size_t> index_;
};

inline nlohmann::json lexicon_to_json(const Lexicon& lex) {
    nlohmann::json words = nlohmann::json::array();
    for (const auto& e : lex.entries())
        words.push_back({{"word", e.word}, {"concept", e.concept_tag}, {"phonemes", e.phonemes}});
    return {{"words", words}};
}

inline Lexicon lexicon_from_json(const nlohmann::json& j) {
    Lexicon lex;
    try {
        for (const auto& w : j.at("words")) {
            LexiconEntry e;
            e.word = w.at("word").get<std::string>();
            e.concept_tag = w.value("concept", std::string{});
            e.phonemes = w.value("phonemes", std::vector<std::string>{});
            lex.add(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("lexicon: ") + ex.what());
    }
    return lex;
}

/// Top-n words by count, ties broken lexicographically ascending. Concept
/// tags and phoneme hints are carried over from `previous` when present.
inline Lexicon select_vocabulary(const FrequencyDictionary& dict, std::size_t n, Warnings* warnings = nullptr,
                                 const Lexicon* previous = nullptr) {
    if (n == 0) throw Error(Errc::BadConfig, "vocabulary size must be >= 1");
    if (dict.entries.empty()) {
        if (warnings) warnings->push_back("frequency dictionary is empty; lexicon is empty");
        return {};
    }
    std::vector<FrequencyEntry> ranked = dict.entries;
    std::sort(ranked.begin(), ranked.end(), [](const FrequencyEntry& a, const FrequencyEntry& b) {
        return a.count != b.count ? a.count > b.count : a.word < b.word;
    });
    ranked.resize(std::min(n, ranked.size()));
    Lexicon lex;
    for (const auto& e : ranked) {
        const LexiconEntry* old = previous ? previous->find(e.word) : nullptr;
        lex.add(old ? *old : LexiconEntry{e.word, e.word, {}});
    }
    return lex;
}

}  // namespace kidvoice
