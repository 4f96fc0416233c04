#pragma once

// Store-level workflows shared by the CLI, the HTTP service and the tests:
// manifest import, config files, enrollment and LM loading.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/corpus.hpp"
#include "kidvoice/language_model.hpp"
#include "kidvoice/pipeline.hpp"
#include "kidvoice/recognizer.hpp"

namespace kidvoice {

/// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

/// Import manifest: TSV "speaker_id<TAB>age<TAB>word<TAB>wav_path", optional
/// header line, WAV paths relative to the manifest's directory.
inline std::vector<ManifestRow> parse_import_manifest(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::vector<ManifestRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, '\t');) cols.push_back(c);
        if (line_no == 1 && !cols.empty() && cols[0] == "speaker_id") continue;
        if (cols.size() < 4 || cols.size() > 5)
            throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + ": expected 4 or 5 columns");
        ManifestRow row;
        row.speaker_id = cols[0];
        try {
            row.age_years = std::stoi(cols[1]);
        } catch (const std::exception&) {
            throw Error(Errc::ParseError, path.string() + ":" + std::to_string(line_no) + ": bad age");
        }
        row.word = cols[2];
        const std::filesystem::path wav(cols[3]);
        row.wav_path = wav.is_absolute() ? wav : path.parent_path() / wav;
        if (cols.size() == 5) row.utterance_id = cols[4];
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ImportSummary {
    std::size_t imported = 0;
    Warnings warnings;  ///< final per-speaker tally warnings
};

inline ImportSummary import_manifest(SpeechDatabase& db, const std::filesystem::path& manifest) {
    ImportSummary summary;
    for (const auto& row : parse_import_manifest(manifest)) {
        db.import_recording(row);
        ++summary.imported;
    }
    summary.warnings = db.tally_warnings();
    return summary;
}

inline nlohmann::json frontend_to_json(const PreprocessConfig& p, const FeatureConfig& f) {
    return {{"preprocess",
             {{"preemph_alpha", p.preemph_alpha},
              {"frame_ms", p.frame_ms},
              {"hop_ms", p.hop_ms},
              {"noise_frames", p.noise_frames},
              {"noise_floor_beta", p.noise_floor_beta},
              {"denoise_enabled", p.denoise_enabled}}},
            {"features",
             {{"n_fft", f.n_fft},
              {"n_filters", f.n_filters},
              {"n_coeffs", f.n_coeffs},
              {"fmin", f.fmin},
              {"fmax", f.fmax},
              {"log_floor", f.log_floor},
              {"cmn_enabled", f.cmn_enabled},
              {"vtln_grid", f.vtln_grid}}}};
}

inline FrontEnd frontend_from_json(const nlohmann::json& j) {
    PreprocessConfig p;
    FeatureConfig f;
    try {
        const auto& pj = j.at("preprocess");
        p.preemph_alpha = pj.value("preemph_alpha", p.preemph_alpha);
        p.frame_ms = pj.value("frame_ms", p.frame_ms);
        p.hop_ms = pj.value("hop_ms", p.hop_ms);
        p.noise_frames = pj.value("noise_frames", p.noise_frames);
        p.noise_floor_beta = pj.value("noise_floor_beta", p.noise_floor_beta);
        p.denoise_enabled = pj.value("denoise_enabled", p.denoise_enabled);
        const auto& fj = j.at("features");
        f.n_fft = fj.value("n_fft", f.n_fft);
        f.n_filters = fj.value("n_filters", f.n_filters);
        f.n_coeffs = fj.value("n_coeffs", f.n_coeffs);
        f.fmin = fj.value("fmin", f.fmin);
        f.fmax = fj.value("fmax", f.fmax);
        f.log_floor = fj.value("log_floor", f.log_floor);
        f.cmn_enabled = fj.value("cmn_enabled", f.cmn_enabled);
        f.vtln_grid = fj.value("vtln_grid", f.vtln_grid);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("frontend config: ") + ex.what());
    }
    return FrontEnd(p, f);
}

/// frontend.json in the store, defaults when absent.
inline FrontEnd load_frontend(const std::filesystem::path& root) {
    const auto p = root / "frontend.json";
    return std::filesystem::exists(p) ? frontend_from_json(SpeechDatabase::parse_json_file(p)) : FrontEnd{};
}

inline void save_frontend(const std::filesystem::path& root, const FrontEnd& fe) {
    write_text(root / "frontend.json",
               frontend_to_json(fe.preprocess_config(), fe.feature_config()).dump(2) + "\n");
}

inline nlohmann::json decoder_to_json(const DecoderConfig& c) {
    return {{"lambda", c.lambda},
            {"tau", c.tau},
            {"band_fraction", c.band_fraction},
            {"n_best", c.n_best},
            {"vtln_search", c.vtln_search}};
}

inline DecoderConfig decoder_from_json(const nlohmann::json& j) {
    DecoderConfig c;
    try {
        c.lambda = j.value("lambda", c.lambda);
        c.tau = j.value("tau", c.tau);
        c.band_fraction = j.value("band_fraction", c.band_fraction);
        c.n_best = j.value("n_best", c.n_best);
        c.vtln_search = j.value("vtln_search", c.vtln_search);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("decoder config: ") + ex.what());
    }
    c.validate();
    return c;
}

inline DecoderConfig load_decoder(const std::filesystem::path& root) {
    const auto p = root / "decoder.json";
    return std::filesystem::exists(p) ? decoder_from_json(SpeechDatabase::parse_json_file(p)) : DecoderConfig{};
}

inline FrequencyDictionary load_frequency_dictionary(const std::filesystem::path& root) {
    const auto p = root / "freq_dict.tsv";
    return std::filesystem::exists(p) ? parse_frequency_tsv(read_text(p)) : FrequencyDictionary{};
}

/// lm.json when present, otherwise trained from freq_dict.tsv and the lexicon.
inline UnigramModel load_language_model(const std::filesystem::path& root, const Lexicon& lexicon) {
    const auto p = root / "lm.json";
    if (std::filesystem::exists(p)) return unigram_from_json(SpeechDatabase::parse_json_file(p));
    return train_unigram(load_frequency_dictionary(root), lexicon);
}

inline AudioBuffer load_wav(const std::filesystem::path& p) { return decode_wav(read_bytes(p)); }

/// Extracts warp-1.0 features for every recording in `split` and enrolls them.
/// With persist set, the feature containers and manifest references are
/// written to the store (replacing any previous templates).
inline TemplateStore enroll_split(SpeechDatabase& db, const FrontEnd& fe, Split split, bool persist) {
    const auto recs = db.recordings_in(split);
    if (recs.empty()) throw Error(Errc::EmptySplit, "no recordings in split " + split_name(split));
    std::vector<FeatureMatrix> feats(recs.size());
    parallel_for(recs.size(), [&](std::size_t i) {
        feats[i] = fe.features(load_wav(db.resolve(recs[i].wav_path)));
        feats[i].utterance_id = recs[i].utterance_id;
    });
    TemplateStore store(db.lexicon());
    if (persist) db.clear_templates();
    for (std::size_t i = 0; i < recs.size(); ++i) {
        Template t{recs[i].word, recs[i].speaker_id, recs[i].utterance_id, std::move(feats[i]), 1.0};
        if (persist) db.add_template(t);
        store.enroll(std::move(t));
    }
    return store;
}

}  // namespace kidvoice
