// kidvoice command line: corpus tooling, enrollment, evaluation, a text-mode
// dialog REPL and the HTTP service.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kidvoice/http.hpp"
#include "kidvoice/kidvoice.hpp"

namespace fs = std::filesystem;
using namespace kidvoice;

namespace {

fs::path default_data_dir() {
    if (const char* env = std::getenv("KIDVOICE_DATA_DIR"); env && *env) return env;
    return "data";
}

SplitRatios parse_ratios(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) v.push_back(std::stod(part));
    if (v.size() != 3) throw Error(Errc::BadConfig, "--ratios needs three comma-separated values");
    return {v[0], v[1], v[2]};
}

std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

void print_response(const SystemResponse& r, const G2PRuleTable* g2p) {
    std::cout << "system [" << r.intent << "]: " << r.text << "\n";
    if (g2p) {
        try {
            std::cout << "phonemes: " << join(phonemize(r.text, *g2p), " ") << "\n";
        } catch (const Error& e) {
            std::cout << "phonemes: <" << e.what() << ">\n";
        }
    }
}

int run_dialog(const fs::path& data, const fs::path& agenda_file, const std::string& transcript_out) {
    auto db = SpeechDatabase::open(data);
    const auto spec = agenda_from_json(SpeechDatabase::parse_json_file(agenda_file));
    ResponseTemplates responses;
    if (fs::exists(data / "responses.json"))
        responses = responses_from_json(SpeechDatabase::parse_json_file(data / "responses.json"));
    std::optional<G2PRuleTable> g2p;
    if (fs::exists(data / "g2p_rules.json")) g2p = g2p_from_json(SpeechDatabase::parse_json_file(data / "g2p_rules.json"));

    std::optional<TemplateStore> templates;
    std::optional<UnigramModel> lm;
    const FrontEnd fe = load_frontend(data);
    const DecoderConfig dec = load_decoder(data);

    DialogServices svc;
    svc.lexicon = &db.lexicon();
    svc.render = [&](const std::string& intent, const Slots& slots) {
        return responses.find(intent) ? generate_response(intent, slots, responses) : intent;
    };
    svc.on_rejected = [&](const std::string& utt, const NBestList& nb, const std::string& context) {
        const auto entry = feedback_unrecognized(utt, nb, context, db);
        db.save();
        std::cout << "(recorded association " << entry.keyword << " @ " << entry.context << ", count "
                  << entry.count << ")\n";
    };

    auto state = init_session(spec, "repl", svc);
    print_response(state.opening, g2p ? &*g2p : nullptr);
    std::cout << "type a word, !word for a rejected result, or a path to a .wav file; empty line quits\n";
    for (std::string line; state.status == SessionStatus::Active && std::cout << "> " && std::getline(std::cin, line);) {
        if (line.empty()) break;
        UserInput input;
        if (line.size() > 4 && line.ends_with(".wav")) {
            if (!templates) {
                templates = db.load_templates();
                lm = load_language_model(data, db.lexicon());
            }
            try {
                auto nb = recognize(fe.candidates(load_wav(line), dec.vtln_search), *templates, *lm, dec);
                std::cout << "recognized: " << nb.top()->word << (nb.rejected ? " (rejected)" : "") << "\n";
                input = std::move(nb);
            } catch (const Error& e) {
                std::cout << "error: " << e.what() << "\n";
                continue;
            }
        } else if (line[0] == '!') {
            input = NBestList{{Hypothesis{line.substr(1), 0.0, 0.0, 0.0, 1.0}}, true};
        } else {
            input = TypedWord{line};
        }
        try {
            auto result = dialog_turn(state, input, svc);
            state = std::move(result.state);
            print_response(result.response, g2p ? &*g2p : nullptr);
        } catch (const Error& e) {
            std::cout << "error: " << e.what() << "\n";
        }
    }
    if (!transcript_out.empty()) write_text(transcript_out, transcript_to_json(state).dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kidvoice: small-vocabulary children's speech recognition and dialog toolkit"};
    app.require_subcommand(1);
    fs::path data = default_data_dir();
    app.add_option("--data", data, "store directory (default $KIDVOICE_DATA_DIR or ./data)");

    auto* corpus = app.add_subcommand("corpus", "speech database tooling");
    corpus->require_subcommand(1);

    auto* import = corpus->add_subcommand("import", "import recordings from a TSV manifest");
    fs::path manifest;
    import->add_option("--manifest", manifest, "speaker_id<TAB>age<TAB>word<TAB>wav_path")->required();

    auto* split = corpus->add_subcommand("split", "assign train/dev/eval splits");
    std::string ratios = "0.8,0.1,0.1";
    std::uint64_t split_seed = 1;
    split->add_option("--ratios", ratios);
    split->add_option("--seed", split_seed);

    auto* vocab = corpus->add_subcommand("vocab", "select the lexicon from freq_dict.tsv");
    std::size_t top_n = 100;
    vocab->add_option("--top", top_n)->required();

    auto* synth = corpus->add_subcommand("synth", "generate a synthetic corpus into the store");
    SynthConfig synth_cfg;
    synth->add_option("--words", synth_cfg.n_words);
    synth->add_option("--speakers", synth_cfg.n_speakers);
    synth->add_option("--per-word", synth_cfg.utterances_per_word, "utterances per word per speaker");
    synth->add_option("--snr", synth_cfg.snr_db, "signal-to-noise ratio in dB");
    synth->add_option("--seed", synth_cfg.seed);

    auto* enroll = app.add_subcommand("enroll", "extract and store templates for a split");
    std::string enroll_split_name = "train";
    bool no_denoise = false, no_cmn = false;
    enroll->add_option("--split", enroll_split_name);
    enroll->add_flag("--no-denoise", no_denoise, "disable spectral subtraction");
    enroll->add_flag("--no-cmn", no_cmn, "disable cepstral mean normalization");

    auto* evaluate = app.add_subcommand("evaluate", "decode a split and report accuracy");
    std::string eval_split_name = "eval";
    DecoderConfig dec_cli = DecoderConfig{};
    bool vtln = false, no_tune = false, save_decoder = false;
    std::string report_path;
    auto* lambda_opt = evaluate->add_option("--lambda", dec_cli.lambda);
    auto* tau_opt = evaluate->add_option("--tau", dec_cli.tau, "fixed rejection threshold (skips dev tuning)");
    auto* band_opt = evaluate->add_option("--band", dec_cli.band_fraction);
    evaluate->add_option("--split", eval_split_name);
    evaluate->add_flag("--vtln", vtln, "search the VTLN warp grid");
    evaluate->add_flag("--no-tune", no_tune, "keep the stored rejection threshold");
    evaluate->add_flag("--save-decoder", save_decoder, "store the decoder config used (incl. tuned tau) in decoder.json");
    evaluate->add_option("--report", report_path, "report JSON path (default <data>/reports/<split>.json)");

    auto* dialog = app.add_subcommand("dialog", "text-mode dialog session");
    fs::path agenda_file;
    std::string transcript_out;
    dialog->add_option("--agenda", agenda_file)->required();
    dialog->add_option("--transcript", transcript_out, "write the session transcript JSON here");

    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("--port", port);
    serve->add_option("--host", host);

    auto* lm = app.add_subcommand("lm", "language model files");
    lm->require_subcommand(1);
    auto* lm_load = lm->add_subcommand("load", "validate and install a model file as the store's lm.json");
    fs::path lm_file;
    lm_load->add_option("file", lm_file)->required();
    auto* lm_train = lm->add_subcommand("train", "train lm.json from freq_dict.tsv and the lexicon");
    auto* lm_adapt = lm->add_subcommand("adapt", "fold recorded keyword associations into lm.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            const auto out = synthesize_corpus(data, synth_cfg);
            std::cout << "wrote " << out.n_utterances << " utterances; manifest " << out.manifest.string() << "\n";
        } else if (*import) {
            auto db = SpeechDatabase::open(data);
            const auto summary = import_manifest(db, manifest);
            db.save();
            std::cout << "imported " << summary.imported << " recordings\n";
            for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
        } else if (*split) {
            auto db = SpeechDatabase::open(data);
            const auto s = db.assign_splits(parse_ratios(ratios), split_seed);
            db.save();
            std::cout << "train " << s.overall.train << ", dev " << s.overall.dev << ", eval " << s.overall.eval << "\n";
        } else if (*vocab) {
            auto db = SpeechDatabase::open(data);
            Warnings warnings;
            auto lex = select_vocabulary(load_frequency_dictionary(data), top_n, &warnings, &db.lexicon());
            for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
            std::cout << "lexicon: " << join(lex.words(), " ") << "\n";
            db.set_lexicon(std::move(lex));
            db.save();
        } else if (*enroll) {
            auto db = SpeechDatabase::open(data);
            FrontEnd current = load_frontend(data);
            PreprocessConfig pre = current.preprocess_config();
            FeatureConfig feat = current.feature_config();
            pre.denoise_enabled = !no_denoise;
            feat.cmn_enabled = !no_cmn;
            const FrontEnd fe(pre, feat);
            const auto store = enroll_split(db, fe, parse_split(enroll_split_name), true);
            save_frontend(data, fe);
            db.save();
            std::cout << "enrolled " << store.size() << " templates over " << store.by_word().size() << " words\n";
        } else if (*evaluate) {
            auto db = SpeechDatabase::open(data);
            const auto templates = db.load_templates();
            DecoderConfig dec = load_decoder(data);
            if (*lambda_opt) dec.lambda = dec_cli.lambda;
            if (*band_opt) dec.band_fraction = dec_cli.band_fraction;
            if (*tau_opt) dec.tau = dec_cli.tau;
            dec.vtln_search = vtln;
            EvalOptions opt{parse_split(eval_split_name), dec, !no_tune && !*tau_opt};
            const auto report = run_evaluation(db, templates, load_language_model(data, db.lexicon()),
                                               load_frontend(data), opt);
            const fs::path out = report_path.empty() ? data / "reports" / (eval_split_name + ".json") : fs::path(report_path);
            write_text(out, report_to_json(report).dump(2) + "\n");
            if (save_decoder) write_text(data / "decoder.json", report.config.at("decoder").dump(2) + "\n");
            std::cout << report_table(report) << "report: " << out.string() << "\n";
        } else if (*dialog) {
            return run_dialog(data, agenda_file, transcript_out);
        } else if (*serve) {
            Service svc(data);
            httplib::Server server;
            mount_routes(server, svc);
            std::cout << "serving " << data.string() << " on http://" << host << ":" << port << "/api/v1\n";
            if (!server.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        } else if (*lm_load) {
            const auto model = unigram_from_json(SpeechDatabase::parse_json_file(lm_file));
            write_text(data / "lm.json", unigram_to_json(model).dump(2) + "\n");
            std::cout << "installed LM with " << model.vocab().size() << " words\n";
        } else if (*lm_train) {
            const auto db = SpeechDatabase::open(data);
            const auto model = train_unigram(load_frequency_dictionary(data), db.lexicon());
            write_text(data / "lm.json", unigram_to_json(model).dump(2) + "\n");
            std::cout << "trained LM over " << model.vocab().size() << " words, total count " << model.total() << "\n";
        } else if (*lm_adapt) {
            const auto db = SpeechDatabase::open(data);
            const auto model = adapt_with_associations(load_language_model(data, db.lexicon()), db.associations());
            write_text(data / "lm.json", unigram_to_json(model).dump(2) + "\n");
            std::cout << "adapted LM with " << db.associations().size() << " associations\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
