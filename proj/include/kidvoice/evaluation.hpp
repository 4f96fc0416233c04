#pragma once

// Evaluation harness: decodes a split against enrolled templates and reports
// top-1 accuracy, per-age accuracy, a word confusion matrix and the rejection
// rate. The rejection threshold can be tuned on the dev split first.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/corpus.hpp"
#include "kidvoice/language_model.hpp"
#include "kidvoice/pipeline.hpp"
#include "kidvoice/recognizer.hpp"
#include "kidvoice/workflow.hpp"

namespace kidvoice {

struct AgeGroupStats {
    std::size_t n = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    std::string split;
    std::size_t n_utterances = 0;
    std::size_t n_correct = 0;
    double overall_accuracy = 0.0;
    double rejection_rate = 0.0;
    std::map<int, AgeGroupStats> per_age_group;
    std::vector<std::string> words;                       ///< confusion axis order
    std::vector<std::vector<std::size_t>> confusion;      ///< [reference][predicted]
    nlohmann::json config;
};

struct DecodedUtterance {
    std::string utterance_id;
    std::string reference;
    int age_years = 0;
    NBestList nbest;
};

inline std::vector<DecodedUtterance> decode_split(const SpeechDatabase& db, const TemplateStore& templates,
                                                  const UnigramModel& lm, const FrontEnd& fe, Split split,
                                                  const DecoderConfig& cfg) {
    const auto recs = db.recordings_in(split);
    std::vector<DecodedUtterance> out(recs.size());
    parallel_for(recs.size(), [&](std::size_t i) {
        const auto cands = fe.candidates(load_wav(db.resolve(recs[i].wav_path)), cfg.vtln_search);
        out[i] = {recs[i].utterance_id, recs[i].word, db.speakers().at(recs[i].speaker_id).age_years,
                  recognize(cands, templates, lm, cfg)};
    });
    return out;
}

/// Picks the threshold that maximizes correct accept/reject decisions on
/// decoded dev utterances (accept correct top-1, reject wrong top-1). Ties
/// prefer the larger threshold. When every candidate accepts everything the
/// threshold sits one standard deviation above the worst dev score.
inline double tune_tau(const std::vector<DecodedUtterance>& dev, double fallback) {
    if (dev.empty()) return fallback;
    std::vector<std::pair<double, bool>> scored;
    for (const auto& d : dev) scored.emplace_back(d.nbest.top()->combined_score, d.nbest.top()->word == d.reference);
    std::sort(scored.begin(), scored.end());

    double mean = 0.0;
    for (const auto& [s, ok] : scored) mean += s;
    mean /= static_cast<double>(scored.size());
    double var = 0.0;
    for (const auto& [s, ok] : scored) var += (s - mean) * (s - mean);
    const double spread = std::sqrt(var / static_cast<double>(scored.size()));

    std::vector<double> candidates{scored.back().first + spread, scored.front().first - spread};
    for (std::size_t i = 0; i + 1 < scored.size(); ++i)
        candidates.push_back(0.5 * (scored[i].first + scored[i + 1].first));

    double best_tau = fallback;
    long best_hits = -1;
    for (double tau : candidates) {
        long hits = 0;
        for (const auto& [s, ok] : scored) hits += (s <= tau) == ok;
        if (hits > best_hits || (hits == best_hits && tau > best_tau)) {
            best_hits = hits;
            best_tau = tau;
        }
    }
    return best_tau;
}

inline EvalReport summarize(const std::vector<DecodedUtterance>& decoded, const std::string& split_label,
                            const std::vector<std::string>& vocabulary, double tau) {
    EvalReport r;
    r.split = split_label;
    std::set<std::string> words(vocabulary.begin(), vocabulary.end());
    for (const auto& d : decoded) {
        words.insert(d.reference);
        words.insert(d.nbest.top()->word);
    }
    r.words.assign(words.begin(), words.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < r.words.size(); ++i) index[r.words[i]] = i;
    r.confusion.assign(r.words.size(), std::vector<std::size_t>(r.words.size(), 0));

    std::map<int, std::pair<std::size_t, std::size_t>> ages;  // age -> (n, correct)
    std::size_t rejected = 0;
    for (const auto& d : decoded) {
        const auto& top = *d.nbest.top();
        const bool correct = top.word == d.reference;
        r.n_correct += correct;
        rejected += top.combined_score > tau;
        ++r.confusion[index.at(d.reference)][index.at(top.word)];
        auto& [n, c] = ages[d.age_years];
        ++n;
        c += correct;
    }
    r.n_utterances = decoded.size();
    if (r.n_utterances > 0) {
        r.overall_accuracy = static_cast<double>(r.n_correct) / static_cast<double>(r.n_utterances);
        r.rejection_rate = static_cast<double>(rejected) / static_cast<double>(r.n_utterances);
    }
    for (const auto& [age, nc] : ages)
        r.per_age_group[age] = {nc.first, static_cast<double>(nc.second) / static_cast<double>(nc.first)};
    return r;
}

struct EvalOptions {
    Split split = Split::Eval;
    DecoderConfig decoder;
    bool tune_tau_on_dev = true;
};

/// Decodes the chosen split. Top-1 accuracy counts every utterance whether or
/// not it was rejected; rejection is reported separately.
inline EvalReport run_evaluation(const SpeechDatabase& db, const TemplateStore& templates, const UnigramModel& lm,
                                 const FrontEnd& fe, EvalOptions opt) {
    if (templates.empty()) throw Error(Errc::NoTemplates, "enroll the train split first");
    if (db.recordings_in(opt.split).empty())
        throw Error(Errc::EmptySplit, "no recordings in split " + split_name(opt.split));
    DecoderConfig cfg = opt.decoder;
    cfg.validate();
    bool tuned = false;
    if (opt.tune_tau_on_dev && opt.split != Split::Dev && !db.recordings_in(Split::Dev).empty()) {
        cfg.tau = tune_tau(decode_split(db, templates, lm, fe, Split::Dev, cfg), cfg.tau);
        tuned = true;
    }
    const auto decoded = decode_split(db, templates, lm, fe, opt.split, cfg);
    EvalReport r = summarize(decoded, split_name(opt.split), db.lexicon().words(), cfg.tau);
    r.config = {{"decoder", decoder_to_json(cfg)},
                {"tau_tuned_on_dev", tuned},
                {"frontend", frontend_to_json(fe.preprocess_config(), fe.feature_config())},
                {"n_templates", templates.size()}};
    return r;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json ages = nlohmann::json::object();
    for (const auto& [age, g] : r.per_age_group) ages[std::to_string(age)] = {{"n", g.n}, {"accuracy", g.accuracy}};
    return {{"split", r.split},
            {"n_utterances", r.n_utterances},
            {"n_correct", r.n_correct},
            {"overall_accuracy", r.overall_accuracy},
            {"rejection_rate", r.rejection_rate},
            {"per_age_group", ages},
            {"confusion", {{"words", r.words}, {"counts", r.confusion}}},
            {"config", r.config}};
}

inline std::string report_table(const EvalReport& r) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "split %s: %zu utterances, top-1 accuracy %.4f, rejection rate %.4f\n",
                  r.split.c_str(), r.n_utterances, r.overall_accuracy, r.rejection_rate);
    out += buf;
    out += "age  n     accuracy\n";
    for (const auto& [age, g] : r.per_age_group) {
        std::snprintf(buf, sizeof buf, "%-4d %-5zu %.4f\n", age, g.n, g.accuracy);
        out += buf;
    }
    out += "\nconfusion (rows: reference, columns: top-1)\n";
    std::size_t width = 6;
    for (const auto& w : r.words) width = std::max(width, w.size() + 1);
    auto pad = [&](const std::string& s) { return s + std::string(width - std::min(width, s.size()), ' '); };
    out += pad("");
    for (const auto& w : r.words) out += pad(w);
    out += '\n';
    for (std::size_t i = 0; i < r.words.size(); ++i) {
        out += pad(r.words[i]);
        for (std::size_t j = 0; j < r.words.size(); ++j) out += pad(std::to_string(r.confusion[i][j]));
        out += '\n';
    }
    return out;
}

}  // namespace kidvoice
