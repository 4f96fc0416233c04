#pragma once

// Response generation (intent -> text) and greedy longest-match
// grapheme-to-phoneme conversion of the rendered text.

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/error.hpp"

namespace kidvoice {

inline constexpr const char* kIntentClarify = "clarify";
inline constexpr const char* kIntentRepeat = "repeat";
inline constexpr const char* kIntentClose = "close";

using Slots = std::map<std::string, std::string>;

struct ResponseTemplate {
    std::string intent_id;
    std::string text;  ///< may contain {slot} placeholders
    std::set<std::string> required_slots;
};

/// Placeholder names in order of appearance. Throws BadConfig on unbalanced
/// or empty braces.
inline std::vector<std::string> placeholders(const std::string& text) {
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find_first_of("{}", pos);
        if (open == std::string::npos) break;
        if (text[open] == '}') throw Error(Errc::BadConfig, "unbalanced '}' in template \"" + text + "\"");
        const auto close = text.find_first_of("{}", open + 1);
        if (close == std::string::npos || text[close] != '}' || close == open + 1)
            throw Error(Errc::BadConfig, "malformed placeholder in template \"" + text + "\"");
        names.push_back(text.substr(open + 1, close - open - 1));
        pos = close + 1;
    }
    return names;
}

inline ResponseTemplate make_template(std::string intent, std::string text) {
    const auto names = placeholders(text);
    return {std::move(intent), std::move(text), {names.begin(), names.end()}};
}

class ResponseTemplates {
public:
    void add(ResponseTemplate t) {
        for (const auto& name : placeholders(t.text))
            if (!t.required_slots.count(name))
                throw Error(Errc::BadConfig, "placeholder {" + name + "} of intent '" + t.intent_id +
                                                 "' is not a required slot");
        const std::string id = t.intent_id;
        templates_[id] = std::move(t);
    }

    const ResponseTemplate* find(const std::string& intent) const {
        auto it = templates_.find(intent);
        return it == templates_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return templates_.size(); }

private:
    std::map<std::string, ResponseTemplate> templates_;
};

/// responses.json: {"intent": "text"} or {"intent": {"text": ..., "required_slots": [...]}}.
inline ResponseTemplates responses_from_json(const nlohmann::json& j) {
    ResponseTemplates out;
    try {
        for (const auto& [intent, v] : j.items()) {
            if (v.is_string()) {
                out.add(make_template(intent, v.get<std::string>()));
            } else {
                auto t = make_template(intent, v.at("text").get<std::string>());
                if (v.contains("required_slots")) {
                    const auto extra = v["required_slots"].get<std::set<std::string>>();
                    t.required_slots.insert(extra.begin(), extra.end());
                }
                out.add(std::move(t));
            }
        }
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("responses: ") + ex.what());
    }
    return out;
}

inline std::string generate_response(const std::string& intent, const Slots& slots,
                                     const ResponseTemplates& templates) {
    const ResponseTemplate* t = templates.find(intent);
    if (!t) throw Error(Errc::UnknownIntent, "no template for intent '" + intent + "'");
    for (const auto& name : t->required_slots)
        if (!slots.count(name)) throw Error(Errc::MissingSlot, "intent '" + intent + "' needs slot '" + name + "'");

    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto open = t->text.find('{', pos);
        if (open == std::string::npos) break;
        const auto close = t->text.find('}', open);
        out.append(t->text, pos, open - pos);
        const std::string& value = slots.at(t->text.substr(open + 1, close - open - 1));
        if (value.find_first_of("{}") != std::string::npos)
            throw Error(Errc::BadConfig, "slot value \"" + value + "\" contains braces");
        out += value;
        pos = close + 1;
    }
    out.append(t->text, pos);
    return out;
}

using PhonemeSequence = std::vector<std::string>;

/// Splits UTF-8 text into code point strings. Invalid lead bytes are taken
/// as single-byte characters.
inline std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
        len = std::min(len, s.size() - i);
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

class G2PRuleTable {
public:
    static constexpr const char* kWordBoundary = "|";

    G2PRuleTable() = default;
    G2PRuleTable(std::vector<std::pair<std::string, PhonemeSequence>> rules, std::set<std::string> inventory)
        : inventory_(std::move(inventory)) {
        for (auto& [g, p] : rules) {
            if (g.empty()) throw Error(Errc::BadConfig, "empty grapheme in G2P rule");
            for (const auto& ph : p)
                if (!inventory_.count(ph))
                    throw Error(Errc::BadConfig, "phoneme '" + ph + "' of rule '" + g + "' not in inventory");
            const auto chars = utf8_chars(g);
            max_len_ = std::max(max_len_, chars.size());
            if (!rules_.emplace(g, std::move(p)).second)
                throw Error(Errc::BadConfig, "duplicate grapheme '" + g + "'");
        }
    }

    const PhonemeSequence* lookup(const std::string& grapheme) const {
        auto it = rules_.find(grapheme);
        return it == rules_.end() ? nullptr : &it->second;
    }
    std::size_t max_grapheme_chars() const { return max_len_; }
    std::size_t max_rule_output() const {
        std::size_t m = 0;
        for (const auto& [g, p] : rules_) m = std::max(m, p.size());
        return m;
    }
    const std::set<std::string>& inventory() const { return inventory_; }

private:
    std::map<std::string, PhonemeSequence> rules_;
    std::set<std::string> inventory_;
    std::size_t max_len_ = 0;
};

/// g2p_rules.json: {"inventory": [...], "rules": [{"g": "sh", "p": ["SH"]}, ...]}
inline G2PRuleTable g2p_from_json(const nlohmann::json& j) {
    try {
        std::vector<std::pair<std::string, PhonemeSequence>> rules;
        for (const auto& r : j.at("rules"))
            rules.emplace_back(r.at("g").get<std::string>(), r.at("p").get<PhonemeSequence>());
        return G2PRuleTable(std::move(rules), j.at("inventory").get<std::set<std::string>>());
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("g2p rules: ") + ex.what());
    }
}

/// Lowercases ASCII, treats ASCII whitespace/punctuation as word boundaries,
/// then converts each word by greedy longest match. Words are separated by
/// the "|" boundary marker.
inline PhonemeSequence phonemize(const std::string& text, const G2PRuleTable& rules) {
    struct Char {
        std::string s;
        std::size_t pos;
    };
    std::vector<std::vector<Char>> words;
    std::vector<Char> current;
    std::size_t pos = 0;
    for (auto ch : utf8_chars(text)) {
        const auto c = static_cast<unsigned char>(ch[0]);
        if (ch.size() == 1 && (std::isspace(c) || std::ispunct(c))) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            if (ch.size() == 1) ch[0] = static_cast<char>(std::tolower(c));
            current.push_back({std::move(ch), pos});
        }
        ++pos;
    }
    if (!current.empty()) words.push_back(std::move(current));

    PhonemeSequence out;
    for (std::size_t w = 0; w < words.size(); ++w) {
        if (w > 0) out.emplace_back(G2PRuleTable::kWordBoundary);
        const auto& word = words[w];
        for (std::size_t i = 0; i < word.size();) {
            const std::size_t longest = std::min(rules.max_grapheme_chars(), word.size() - i);
            const PhonemeSequence* match = nullptr;
            std::size_t used = 0;
            for (std::size_t len = longest; len >= 1 && !match; --len) {
                std::string g;
                for (std::size_t k = 0; k < len; ++k) g += word[i + k].s;
                if ((match = rules.lookup(g))) used = len;
            }
            if (!match)
                throw Error(Errc::UnmappedGrapheme,
                            "no rule for '" + word[i].s + "' at position " + std::to_string(word[i].pos));
            out.insert(out.end(), match->begin(), match->end());
            i += used;
        }
    }
    return out;
}

}  // namespace kidvoice
