#pragma once

// The speech database: speakers, recordings, train/dev/eval splits, enrolled
// template references and keyword associations, persisted as a directory of
// plain files:
//
//   corpus.json     manifest (schema_version 1), canonical key order
//   lexicon.json    vocabulary with concept tags
//   freq_dict.tsv   word<TAB>count
//   templates/      binary feature containers referenced from the manifest

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/association.hpp"
#include "kidvoice/audio.hpp"
#include "kidvoice/clock.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/features.hpp"
#include "kidvoice/io.hpp"
#include "kidvoice/recognizer.hpp"
#include "kidvoice/vocabulary.hpp"

namespace kidvoice {

inline constexpr int kMinAge = 2;
inline constexpr int kMaxAge = 7;
inline constexpr std::size_t kTargetWordsLow = 80;
inline constexpr std::size_t kTargetWordsHigh = 100;

enum class Split { Unassigned, Train, Dev, Eval };

inline std::string split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Eval: return "eval";
        case Split::Unassigned: break;
    }
    return "unassigned";
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "eval") return Split::Eval;
    if (s == "unassigned") return Split::Unassigned;
    throw Error(Errc::ParseError, "unknown split '" + s + "'");
}

struct SpeakerRecord {
    std::string speaker_id;
    int age_years = 0;
    std::string notes;
};

struct RecordingEntry {
    std::string utterance_id;
    std::string speaker_id;
    std::string word;
    std::string wav_path;  ///< relative to the store root when inside it
    Split split = Split::Unassigned;
};

struct ManifestRow {
    std::string speaker_id;
    int age_years = 0;
    std::string word;
    std::filesystem::path wav_path;
    std::string utterance_id;  ///< empty: derived from the WAV file stem
};

struct ImportResult {
    RecordingEntry entry;
    std::optional<std::string> warning;
};

struct SplitRatios {
    double train = 0.8;
    double dev = 0.1;
    double eval = 0.1;
};

struct SplitCounts {
    std::size_t train = 0, dev = 0, eval = 0;
    std::size_t total() const { return train + dev + eval; }
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct CorpusSplit {
    SplitCounts overall;
    std::map<std::string, SplitCounts> per_word;
};

struct TemplateRef {
    std::string utterance_id;
    std::string word;
    std::string speaker_id;
    std::string features_path;  ///< relative to the store root
    double warp_alpha = 1.0;
};

/// Largest-remainder apportionment of n items over three ratios. Ties in the
/// fractional part go to the earlier bucket (train, dev, eval).
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
    const std::array<double, 3> ratio{r.train, r.dev, r.eval};
    std::array<std::size_t, 3> out{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(n) * ratio[i];
        const double fl = std::floor(quota + 1e-9);
        out[i] = static_cast<std::size_t>(fl);
        frac[i] = std::max(0.0, quota - fl);
        assigned += out[i];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (frac[i] > frac[best] + 1e-12) best = i;
        ++out[best];
        frac[best] = -1.0;
        ++assigned;
    }
    return out;
}

/// Unbiased draw in [0, bound) from a standard-specified engine, so split
/// assignments do not depend on the library's distribution implementation.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

class SpeechDatabase {
public:
    using Clock = std::function<std::int64_t()>;

    SpeechDatabase() = default;
    explicit SpeechDatabase(std::filesystem::path root, Lexicon lexicon = {})
        : root_(std::move(root)), lexicon_(std::move(lexicon)) {}

    /// Loads corpus.json and lexicon.json from `root` when present.
    static SpeechDatabase open(const std::filesystem::path& root) {
        SpeechDatabase db(root);
        if (std::filesystem::exists(root / "lexicon.json"))
            db.lexicon_ = lexicon_from_json(parse_json_file(root / "lexicon.json"));
        if (std::filesystem::exists(root / "corpus.json"))
            db.load_manifest(parse_json_file(root / "corpus.json"));
        return db;
    }

    void set_clock(Clock clock) { clock_ = std::move(clock); }

    const std::filesystem::path& root() const { return root_; }
    const Lexicon& lexicon() const { return lexicon_; }
    void set_lexicon(Lexicon lex) { lexicon_ = std::move(lex); }

    const std::map<std::string, SpeakerRecord>& speakers() const { return speakers_; }
    const std::map<std::string, RecordingEntry>& recordings() const { return recordings_; }
    const std::vector<AssociationEntry>& associations() const { return associations_; }
    const std::vector<TemplateRef>& templates() const { return templates_; }
    const std::optional<std::pair<SplitRatios, std::uint64_t>>& split_config() const { return split_config_; }

    std::size_t speaker_tally(const std::string& speaker_id) const {
        std::size_t n = 0;
        for (const auto& [id, r] : recordings_) n += r.speaker_id == speaker_id;
        return n;
    }

    /// Warning text for a speaker whose recording count is outside 80-100,
    /// nullopt otherwise.
    std::optional<std::string> tally_warning(const std::string& speaker_id) const {
        const std::size_t n = speaker_tally(speaker_id);
        if (n < kTargetWordsLow)
            return "speaker " + speaker_id + " has " + std::to_string(n) + " recordings, below 80-100 target";
        if (n > kTargetWordsHigh)
            return "speaker " + speaker_id + " has " + std::to_string(n) + " recordings, above 80-100 target";
        return std::nullopt;
    }

    Warnings tally_warnings() const {
        Warnings out;
        for (const auto& [id, s] : speakers_)
            if (auto w = tally_warning(id)) out.push_back(*w);
        return out;
    }

    ImportResult import_recording(const ManifestRow& row) {
        if (row.age_years < kMinAge || row.age_years > kMaxAge)
            throw Error(Errc::AgeOutOfRange, "age " + std::to_string(row.age_years) + " outside [2, 7]");
        if (row.speaker_id.empty()) throw Error(Errc::BadConfig, "empty speaker id");
        if (!lexicon_.contains(row.word)) throw Error(Errc::UnknownWord, "'" + row.word + "' is not in the lexicon");
        const std::string utt = row.utterance_id.empty() ? row.wav_path.stem().string() : row.utterance_id;
        if (recordings_.count(utt)) throw Error(Errc::DuplicateUtteranceId, utt);
        decode_wav(read_bytes(row.wav_path));

        auto [it, inserted] = speakers_.try_emplace(row.speaker_id, SpeakerRecord{row.speaker_id, row.age_years, {}});
        std::optional<std::string> age_note;
        if (!inserted && it->second.age_years != row.age_years)
            age_note = "speaker " + row.speaker_id + " already recorded with age " +
                       std::to_string(it->second.age_years) + "; keeping it";

        RecordingEntry entry{utt, row.speaker_id, row.word, store_relative(row.wav_path), Split::Unassigned};
        recordings_.emplace(utt, entry);
        ImportResult res{entry, tally_warning(row.speaker_id)};
        if (age_note) res.warning = res.warning ? *res.warning + "; " + *age_note : *age_note;
        return res;
    }

    /// Per-word stratified random split. Within each word, recordings are
    /// ordered by utterance id and shuffled with a seeded mt19937_64.
    CorpusSplit assign_splits(const SplitRatios& ratios, std::uint64_t seed) {
        if (ratios.train < 0 || ratios.dev < 0 || ratios.eval < 0 ||
            std::abs(ratios.train + ratios.dev + ratios.eval - 1.0) > 1e-9)
            throw Error(Errc::BadConfig, "split ratios must be non-negative and sum to 1");
        std::map<std::string, std::vector<std::string>> by_word;
        for (const auto& [id, r] : recordings_) by_word[r.word].push_back(id);
        for (const auto& [word, ids] : by_word)
            if (ids.size() < 3)
                throw Error(Errc::TooFewRecordings,
                            "'" + word + "' has " + std::to_string(ids.size()) + " recordings, need >= 3");

        std::mt19937_64 rng(seed);
        CorpusSplit summary;
        for (auto& [word, ids] : by_word) {
            for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[uniform_below(rng, i)]);
            const auto sizes = apportion(ids.size(), ratios);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const Split s = i < sizes[0] ? Split::Train : i < sizes[0] + sizes[1] ? Split::Dev : Split::Eval;
                recordings_.at(ids[i]).split = s;
            }
            summary.per_word[word] = {sizes[0], sizes[1], sizes[2]};
            summary.overall.train += sizes[0];
            summary.overall.dev += sizes[1];
            summary.overall.eval += sizes[2];
        }
        split_config_ = std::make_pair(ratios, seed);
        return summary;
    }

    std::vector<RecordingEntry> recordings_in(Split s) const {
        std::vector<RecordingEntry> out;
        for (const auto& [id, r] : recordings_)
            if (r.split == s) out.push_back(r);
        return out;
    }

    AssociationEntry record_association(const std::string& utterance_id, const std::string& keyword,
                                        const std::string& context) {
        if (!lexicon_.contains(keyword)) throw Error(Errc::UnknownKeyword, "'" + keyword + "' is not in the lexicon");
        const std::int64_t now = clock_ ? clock_() : system_clock_ms();
        for (auto& a : associations_) {
            if (a.keyword == keyword && a.context == context) {
                ++a.count;
                a.utterance_id = utterance_id;
                a.timestamp = now;
                return a;
            }
        }
        associations_.push_back({utterance_id, keyword, context, 1, now});
        return associations_.back();
    }

    std::vector<AssociationEntry> associations_for_keyword(const std::string& keyword) const {
        std::vector<AssociationEntry> out;
        for (const auto& a : associations_)
            if (a.keyword == keyword) out.push_back(a);
        return out;
    }

    std::vector<AssociationEntry> associations_for_context(const std::string& context) const {
        std::vector<AssociationEntry> out;
        for (const auto& a : associations_)
            if (a.context == context) out.push_back(a);
        return out;
    }

    /// Writes the template's features under templates/ and records a reference.
    /// Re-enrolling an utterance at the same warp replaces its reference.
    void add_template(const Template& t) {
        if (!lexicon_.contains(t.word)) throw Error(Errc::UnknownWord, "'" + t.word + "' is not in the lexicon");
        const std::string rel = "templates/" + t.utterance_id + ".kvfm";
        write_bytes(root_ / rel, serialize_features(t.features.vectors));
        std::erase_if(templates_, [&](const TemplateRef& r) {
            return r.utterance_id == t.utterance_id && r.warp_alpha == t.warp_alpha;
        });
        templates_.push_back({t.utterance_id, t.word, t.speaker_id, rel, t.warp_alpha});
    }

    void clear_templates() { templates_.clear(); }

    TemplateStore load_templates() const {
        TemplateStore store(lexicon_);
        for (const auto& ref : sorted_templates()) {
            FeatureMatrix f{deserialize_features(read_bytes(root_ / ref.features_path)), ref.utterance_id};
            store.enroll({ref.word, ref.speaker_id, ref.utterance_id, std::move(f), ref.warp_alpha});
        }
        return store;
    }

    std::filesystem::path resolve(const std::string& stored_path) const {
        const std::filesystem::path p(stored_path);
        return p.is_absolute() ? p : root_ / p;
    }

    nlohmann::json manifest_json() const {
        using nlohmann::json;
        json speakers = json::array();
        for (const auto& [id, s] : speakers_)
            speakers.push_back({{"speaker_id", s.speaker_id}, {"age_years", s.age_years}, {"notes", s.notes}});
        json recs = json::array();
        for (const auto& [id, r] : recordings_)
            recs.push_back({{"utterance_id", r.utterance_id}, {"speaker_id", r.speaker_id}, {"word", r.word},
                            {"wav_path", r.wav_path}, {"split", split_name(r.split)}});
        auto assoc_sorted = associations_;
        std::sort(assoc_sorted.begin(), assoc_sorted.end(), [](const auto& a, const auto& b) {
            return std::tie(a.keyword, a.context) < std::tie(b.keyword, b.context);
        });
        json assoc = json::array();
        for (const auto& a : assoc_sorted)
            assoc.push_back({{"utterance_id", a.utterance_id}, {"keyword", a.keyword}, {"context", a.context},
                             {"count", a.count}, {"timestamp", a.timestamp}});
        json tmpl = json::array();
        for (const auto& t : sorted_templates())
            tmpl.push_back({{"utterance_id", t.utterance_id}, {"word", t.word}, {"speaker_id", t.speaker_id},
                            {"features", t.features_path}, {"warp_alpha", t.warp_alpha}});
        json split = nullptr;
        if (split_config_) {
            const auto& [r, seed] = *split_config_;
            split = {{"ratios", {r.train, r.dev, r.eval}}, {"seed", seed}};
        }
        return {{"schema_version", 1}, {"speakers", speakers}, {"recordings", recs},
                {"split", split},      {"associations", assoc}, {"templates", tmpl}};
    }

    std::string manifest_text() const { return manifest_json().dump(2) + "\n"; }

    void save() const {
        write_text(root_ / "corpus.json", manifest_text());
        write_text(root_ / "lexicon.json", lexicon_to_json(lexicon_).dump(2) + "\n");
    }

    void load_manifest(const nlohmann::json& j) {
        try {
            if (j.at("schema_version").get<int>() != 1) throw Error(Errc::ParseError, "unsupported schema_version");
            speakers_.clear();
            recordings_.clear();
            associations_.clear();
            templates_.clear();
            split_config_.reset();
            for (const auto& s : j.at("speakers")) {
                SpeakerRecord rec{s.at("speaker_id"), s.at("age_years"), s.value("notes", std::string{})};
                if (rec.age_years < kMinAge || rec.age_years > kMaxAge)
                    throw Error(Errc::AgeOutOfRange, "manifest speaker " + rec.speaker_id);
                speakers_[rec.speaker_id] = rec;
            }
            for (const auto& r : j.at("recordings")) {
                RecordingEntry e{r.at("utterance_id"), r.at("speaker_id"), r.at("word"), r.at("wav_path"),
                                 parse_split(r.at("split").get<std::string>())};
                if (!speakers_.count(e.speaker_id)) throw Error(Errc::UnknownSpeaker, e.speaker_id);
                if (!recordings_.emplace(e.utterance_id, e).second)
                    throw Error(Errc::DuplicateUtteranceId, e.utterance_id);
            }
            if (!j.at("split").is_null()) {
                const auto& r = j["split"].at("ratios");
                split_config_ = std::make_pair(SplitRatios{r.at(0), r.at(1), r.at(2)},
                                               j["split"].at("seed").get<std::uint64_t>());
            }
            for (const auto& a : j.at("associations"))
                associations_.push_back({a.at("utterance_id"), a.at("keyword"), a.at("context"), a.at("count"),
                                         a.at("timestamp")});
            for (const auto& t : j.at("templates"))
                templates_.push_back(
                    {t.at("utterance_id"), t.at("word"), t.at("speaker_id"), t.at("features"), t.at("warp_alpha")});
        } catch (const nlohmann::json::exception& ex) {
            throw Error(Errc::ParseError, std::string("corpus manifest: ") + ex.what());
        }
    }

    static nlohmann::json parse_json_file(const std::filesystem::path& p) {
        try {
            return nlohmann::json::parse(read_text(p));
        } catch (const nlohmann::json::parse_error& ex) {
            throw Error(Errc::ParseError, p.string() + ": " + ex.what());
        }
    }

private:
    std::vector<TemplateRef> sorted_templates() const {
        auto out = templates_;
        std::sort(out.begin(), out.end(), [](const TemplateRef& a, const TemplateRef& b) {
            return std::tie(a.utterance_id, a.warp_alpha) < std::tie(b.utterance_id, b.warp_alpha);
        });
        return out;
    }

    std::string store_relative(const std::filesystem::path& p) const {
        const auto abs = std::filesystem::weakly_canonical(std::filesystem::absolute(p));
        if (!root_.empty()) {
            const auto root_abs = std::filesystem::weakly_canonical(std::filesystem::absolute(root_));
            const auto rel = abs.lexically_relative(root_abs);
            if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        }
        return abs.generic_string();
    }

    std::filesystem::path root_;
    Lexicon lexicon_;
    std::map<std::string, SpeakerRecord> speakers_;
    std::map<std::string, RecordingEntry> recordings_;
    std::vector<AssociationEntry> associations_;
    std::vector<TemplateRef> templates_;
    std::optional<std::pair<SplitRatios, std::uint64_t>> split_config_;
    Clock clock_;
};

}  // namespace kidvoice
