#pragma once

// Desk-scale stand-in for a child recording campaign: each word is a
// two-sinusoid pattern with frequency glides and a syllable envelope, each
// pseudo-speaker scales every frequency by a fixed factor (higher for younger
// children), and white Gaussian noise is mixed in at a target SNR.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/audio.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/io.hpp"
#include "kidvoice/vocabulary.hpp"

namespace kidvoice {

struct WordPattern {
    std::string word;
    std::string concept_tag;
    double f1_start, f1_end;  ///< Hz, first component glide
    double f2_start, f2_end;  ///< Hz, second component glide
    double duration;          ///< seconds
    int syllables;
    std::int64_t frequency_count;  ///< frequency dictionary count
};

inline const std::vector<WordPattern>& default_word_patterns() {
    static const std::vector<WordPattern> patterns{
        {"mama", "family", 400, 400, 800, 800, 0.45, 2, 104},
        {"tato", "family", 500, 500, 1750, 1750, 0.40, 2, 103},
        {"ball", "toy", 350, 700, 1050, 1400, 0.38, 1, 102},
        {"dog", "animal", 700, 350, 1400, 1050, 0.35, 1, 101},
        {"cat", "animal", 600, 600, 3000, 3000, 0.30, 1, 100},
        {"red", "color", 450, 550, 2200, 1400, 0.34, 1, 99},
        {"blue", "color", 300, 300, 1500, 2400, 0.42, 1, 98},
        {"hello", "greeting", 500, 700, 1000, 2100, 0.55, 2, 97},
        {"bye", "farewell", 800, 450, 1200, 2500, 0.48, 1, 96},
        {"yes", "yes", 350, 450, 2600, 2900, 0.40, 3, 95},
    };
    return patterns;
}

struct SynthSpeaker {
    std::string speaker_id;
    int age_years;
    double frequency_scale;
};

inline std::vector<SynthSpeaker> default_synth_speakers(std::size_t n) {
    std::vector<SynthSpeaker> out;
    for (std::size_t i = 0; i < n; ++i) {
        // scales spread over [0.9, 1.3]; younger children get higher scales
        const double scale = n == 1 ? 1.1 : 0.9 + 0.4 * static_cast<double>(i) / static_cast<double>(n - 1);
        const int age = 7 - static_cast<int>(std::lround(5.0 * (scale - 0.9) / 0.4));
        out.push_back({"spk" + std::to_string(i + 1), age, scale});
    }
    return out;
}

struct SynthConfig {
    std::size_t n_words = 10;
    std::size_t n_speakers = 5;
    std::size_t utterances_per_word = 8;  ///< per speaker
    double snr_db = 20.0;
    std::uint64_t seed = 1;
};

/// Portable RNG helpers on top of mt19937_64 (whose output sequence is fixed
/// by the standard, unlike the library distributions).
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

/// One noisy utterance of `pattern` by a speaker with the given scale.
inline std::vector<double> synthesize_utterance(const WordPattern& pattern, double frequency_scale, double snr_db,
                                                SynthRng& rng) {
    const double sr = kCanonicalRate;
    const double dur = pattern.duration * rng.uniform(0.9, 1.1);
    const double jitter = rng.uniform(0.97, 1.03);
    const double amp = rng.uniform(0.3, 0.5);
    const double lead = rng.uniform(0.15, 0.25);
    const double trail = 0.15;
    const auto n_lead = static_cast<std::size_t>(lead * sr);
    const auto n_voice = static_cast<std::size_t>(dur * sr);
    const auto n_total = n_lead + n_voice + static_cast<std::size_t>(trail * sr);

    std::vector<double> x(n_total, 0.0);
    double ph1 = rng.uniform(0, 2 * std::numbers::pi), ph2 = rng.uniform(0, 2 * std::numbers::pi);
    double power = 0.0;
    const double k = frequency_scale * jitter;
    for (std::size_t n = 0; n < n_voice; ++n) {
        const double t = static_cast<double>(n) / static_cast<double>(n_voice);
        const double f1 = k * (pattern.f1_start + (pattern.f1_end - pattern.f1_start) * t);
        const double f2 = k * (pattern.f2_start + (pattern.f2_end - pattern.f2_start) * t);
        ph1 += 2 * std::numbers::pi * f1 / sr;
        ph2 += 2 * std::numbers::pi * f2 / sr;
        // one raised-sine hump per syllable
        const double env = std::pow(std::sin(std::numbers::pi * t * pattern.syllables), 2);
        const double v = amp * env * (std::sin(ph1) + 0.6 * std::sin(ph2));
        x[n_lead + n] = v;
        power += v * v;
    }
    power /= static_cast<double>(n_voice);
    const double noise_std = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    for (double& v : x) v = std::clamp(v + noise_std * rng.normal(), -1.0, 1.0);
    return x;
}

struct SynthOutput {
    std::filesystem::path manifest;  ///< TSV accepted by `corpus import`
    std::size_t n_utterances = 0;
};

namespace detail {

inline nlohmann::json demo_agenda() {
    return nlohmann::json::array({
        {{"name", "greet"}, {"expected_concepts", {"greeting"}}, {"prompt_intent", "greet"}},
        {{"name", "ask_color"}, {"expected_concepts", {"color"}}, {"prompt_intent", "ask_color"}},
        {{"name", "ask_animal"}, {"expected_concepts", {"animal"}}, {"prompt_intent", "ask_animal"}},
        {{"name", "ask_family"}, {"expected_concepts", {"family"}}, {"prompt_intent", "ask_family"}},
        {{"name", "goodbye"}, {"expected_concepts", {"farewell"}}, {"prompt_intent", "goodbye"}},
    });
}

inline nlohmann::json demo_responses() {
    return {
        {"greet", "Hello there! Say hello to start."},
        {"ask_color", "What colour do you like?"},
        {"ask_animal", "You like {ask_color}. Which animal do you like?"},
        {"ask_family", "Who is at home with you?"},
        {"goodbye", "We are done. Say bye!"},
        {"clarify", "Hmm, I did not get that. Let us try again."},
        {"repeat", "Please say that again."},
        {"close", "Goodbye! That was fun."},
    };
}

inline nlohmann::json demo_g2p_rules() {
    const std::vector<std::pair<std::string, std::vector<std::string>>> rules{
        {"sh", {"SH"}}, {"ch", {"CH"}}, {"th", {"TH"}}, {"ng", {"NG"}}, {"ck", {"K"}},  {"ee", {"IY"}},
        {"oo", {"UW"}}, {"ou", {"AW"}}, {"ay", {"EY"}}, {"ai", {"EY"}}, {"qu", {"K", "W"}},
        {"a", {"AE"}},  {"b", {"B"}},   {"c", {"K"}},   {"d", {"D"}},   {"e", {"EH"}},  {"f", {"F"}},
        {"g", {"G"}},   {"h", {"HH"}},  {"i", {"IH"}},  {"j", {"JH"}},  {"k", {"K"}},   {"l", {"L"}},
        {"m", {"M"}},   {"n", {"N"}},   {"o", {"AA"}},  {"p", {"P"}},   {"q", {"K"}},   {"r", {"R"}},
        {"s", {"S"}},   {"t", {"T"}},   {"u", {"AH"}},  {"v", {"V"}},   {"w", {"W"}},   {"x", {"K", "S"}},
        {"y", {"Y"}},   {"z", {"Z"}},
    };
    std::set<std::string> inventory;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [g, p] : rules) {
        inventory.insert(p.begin(), p.end());
        list.push_back({{"g", g}, {"p", p}});
    }
    return {{"inventory", inventory}, {"rules", list}};
}

}  // namespace detail

/// Writes WAVs, an import manifest, freq_dict.tsv and lexicon.json, plus demo
/// dialog assets (agendas/default.json, responses.json, g2p_rules.json) when
/// they do not exist yet.
inline SynthOutput synthesize_corpus(const std::filesystem::path& out_dir, const SynthConfig& cfg) {
    const auto& patterns = default_word_patterns();
    if (cfg.n_words < 1 || cfg.n_words > patterns.size())
        throw Error(Errc::BadConfig, "synth supports 1.." + std::to_string(patterns.size()) + " words");
    if (cfg.n_speakers < 1) throw Error(Errc::BadConfig, "need at least one speaker");
    if (cfg.utterances_per_word < 1) throw Error(Errc::BadConfig, "need at least one utterance per word");

    SynthRng rng(cfg.seed);
    SynthOutput out;
    out.manifest = out_dir / "manifest.tsv";
    std::string manifest = "speaker_id\tage\tword\twav_path\n";
    FrequencyDictionary dict;
    Lexicon lex;
    for (std::size_t w = 0; w < cfg.n_words; ++w) {
        dict.entries.push_back({patterns[w].word, patterns[w].frequency_count});
        lex.add({patterns[w].word, patterns[w].concept_tag, {}});
    }
    for (const auto& spk : default_synth_speakers(cfg.n_speakers)) {
        for (std::size_t w = 0; w < cfg.n_words; ++w) {
            for (std::size_t k = 0; k < cfg.utterances_per_word; ++k) {
                const auto samples = synthesize_utterance(patterns[w], spk.frequency_scale, cfg.snr_db, rng);
                const std::string utt = spk.speaker_id + "_" + patterns[w].word + "_" + std::to_string(k + 1);
                const std::string rel = "wav/" + utt + ".wav";
                write_bytes(out_dir / rel, encode_wav(samples));
                manifest += spk.speaker_id + '\t' + std::to_string(spk.age_years) + '\t' + patterns[w].word + '\t' +
                            rel + '\n';
                ++out.n_utterances;
            }
        }
    }
    write_text(out.manifest, manifest);
    write_text(out_dir / "freq_dict.tsv", format_frequency_tsv(dict));
    write_text(out_dir / "lexicon.json", lexicon_to_json(lex).dump(2) + "\n");
    auto write_default = [&](const std::filesystem::path& p, const nlohmann::json& j) {
        if (!std::filesystem::exists(out_dir / p)) write_text(out_dir / p, j.dump(2) + "\n");
    };
    write_default("agendas/default.json", detail::demo_agenda());
    write_default("responses.json", detail::demo_responses());
    write_default("g2p_rules.json", detail::demo_g2p_rules());
    return out;
}

}  // namespace kidvoice
