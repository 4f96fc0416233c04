#pragma once

// Transport-independent request handlers behind the /api/v1 HTTP surface.
// The service keeps only the template store and the session registry in
// memory; LM, response templates, G2P rules and agenda specs are read from
// the data directory when used, so they can be swapped on disk at runtime.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "kidvoice/corpus.hpp"
#include "kidvoice/dialog.hpp"
#include "kidvoice/language_model.hpp"
#include "kidvoice/pipeline.hpp"
#include "kidvoice/recognizer.hpp"
#include "kidvoice/speech_output.hpp"
#include "kidvoice/workflow.hpp"

namespace kidvoice {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

inline int http_status_for(Errc c) {
    switch (c) {
        case Errc::UnsupportedFormat:
        case Errc::CorruptHeader:
        case Errc::EmptySignal:
        case Errc::TooFewFrames:
        case Errc::ParseError:
        case Errc::BadConfig:
        case Errc::UnknownWord:
        case Errc::UnknownKeyword:
            return 400;
        case Errc::UnknownSession:
        case Errc::UnknownIntent:
            return 404;
        case Errc::SessionFinished:
        case Errc::NoTemplates:
        case Errc::EmptyTemplateStore:
            return 409;
        default:
            return 500;
    }
}

inline ApiResponse error_response(const Error& e) {
    // an empty template store is reported under the service-level code
    const Errc code = e.code() == Errc::EmptyTemplateStore ? Errc::NoTemplates : e.code();
    return {http_status_for(code), {{"error", {{"code", errc_name(code)}, {"message", e.what()}}}}};
}

struct ServiceOptions {
    std::chrono::seconds session_ttl{3600};
};

class Service {
public:
    explicit Service(std::filesystem::path root, ServiceOptions opt = {})
        : root_(std::move(root)),
          opt_(opt),
          db_(SpeechDatabase::open(root_)),
          frontend_(load_frontend(root_)),
          decoder_(load_decoder(root_)),
          templates_(db_.load_templates()) {}

    ApiResponse recognize(std::span<const std::uint8_t> wav) const {
        return guarded([&] {
            std::shared_lock lock(store_mutex_);
            if (templates_.empty()) throw Error(Errc::NoTemplates, "template store is empty");
            const auto lm = load_language_model(root_, db_.lexicon());
            const auto cands = frontend_.candidates(decode_wav(wav), decoder_.vtln_search);
            return ApiResponse{200, nbest_to_json(kidvoice::recognize(cands, templates_, lm, decoder_))};
        });
    }

    /// Body: {"agenda": "<id>"}; empty body selects "default".
    ApiResponse create_session(const std::string& body) {
        return guarded([&] {
            std::string agenda_id = "default";
            if (!body.empty()) agenda_id = parse_body(body).value("agenda", agenda_id);
            static const std::regex safe_id("[A-Za-z0-9_-]+");
            if (!std::regex_match(agenda_id, safe_id)) throw Error(Errc::BadConfig, "invalid agenda id");
            const auto path = root_ / "agendas" / (agenda_id + ".json");
            if (!std::filesystem::exists(path)) throw Error(Errc::BadConfig, "unknown agenda '" + agenda_id + "'");
            const auto spec = agenda_from_json(SpeechDatabase::parse_json_file(path));

            auto slot = std::make_shared<SessionSlot>();
            std::string id;
            {
                std::lock_guard lock(registry_mutex_);
                purge_expired();
                id = "s" + std::to_string(++session_counter_);
                slot->created = std::chrono::steady_clock::now();
                sessions_[id] = slot;
            }
            std::lock_guard slot_lock(slot->mutex);
            const auto assets = load_assets();
            slot->state = init_session(spec, id, services(assets));
            nlohmann::json out = turn_payload(slot->state, slot->state.opening, assets);
            out["session_id"] = id;
            out["agenda"] = agenda_id;
            return ApiResponse{201, out};
        });
    }

    /// Body: {"word": "red"} for typed input or {"nbest": {...}} for a
    /// recognition result; optional "utterance_id".
    ApiResponse turn(const std::string& session_id, const std::string& body) {
        return guarded([&] {
            auto slot = find_session(session_id);
            const auto j = parse_body(body);
            UserInput input;
            if (j.contains("nbest"))
                input = nbest_from_json(j["nbest"]);
            else if (j.contains("word") && j["word"].is_string())
                input = TypedWord{j["word"].get<std::string>()};
            else
                throw Error(Errc::ParseError, "turn body needs \"word\" or \"nbest\"");
            const std::string utt = j.value("utterance_id", std::string{});

            std::lock_guard lock(slot->mutex);
            const auto assets = load_assets();
            auto result = dialog_turn(slot->state, input, services(assets), utt);
            slot->state = std::move(result.state);
            nlohmann::json out = turn_payload(slot->state, result.response, assets);
            const auto& last = slot->state.history.back();
            out["turn_index"] = last.index;
            out["matched_handler"] = last.matched_handler ? nlohmann::json(*last.matched_handler) : nlohmann::json(nullptr);
            return ApiResponse{200, out};
        });
    }

    ApiResponse history(const std::string& session_id) const {
        return guarded([&] {
            auto slot = find_session(session_id);
            std::lock_guard lock(slot->mutex);
            return ApiResponse{200, transcript_to_json(slot->state)};
        });
    }

    ApiResponse corpus_stats() const {
        return guarded([&] {
            std::shared_lock lock(store_mutex_);
            nlohmann::json splits = {{"train", 0}, {"dev", 0}, {"eval", 0}, {"unassigned", 0}};
            std::map<std::string, std::size_t> per_age;
            for (const auto& [id, r] : db_.recordings()) {
                splits[split_name(r.split)] = splits[split_name(r.split)].get<std::size_t>() + 1;
                ++per_age[std::to_string(db_.speakers().at(r.speaker_id).age_years)];
            }
            nlohmann::json templates_per_word = nlohmann::json::object();
            for (const auto& [w, ts] : templates_.by_word()) templates_per_word[w] = ts.size();
            return ApiResponse{200,
                               {{"speakers", db_.speakers().size()},
                                {"recordings", db_.recordings().size()},
                                {"splits", splits},
                                {"recordings_per_age", per_age},
                                {"templates", templates_.size()},
                                {"templates_per_word", templates_per_word},
                                {"associations", db_.associations().size()},
                                {"vocabulary", db_.lexicon().words()}}};
        });
    }

    const TemplateStore& templates() const { return templates_; }

private:
    struct SessionSlot {
        std::mutex mutex;
        DialogState state;
        std::chrono::steady_clock::time_point created;
    };

    struct Assets {
        ResponseTemplates responses;
        G2PRuleTable g2p;
        bool have_g2p = false;
    };

    template <class Fn>
    static ApiResponse guarded(Fn&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            return error_response(e);
        }
    }

    static nlohmann::json parse_body(const std::string& body) {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& ex) {
            throw Error(Errc::ParseError, std::string("request body: ") + ex.what());
        }
    }

    Assets load_assets() const {
        Assets a;
        if (std::filesystem::exists(root_ / "responses.json"))
            a.responses = responses_from_json(SpeechDatabase::parse_json_file(root_ / "responses.json"));
        if (std::filesystem::exists(root_ / "g2p_rules.json")) {
            a.g2p = g2p_from_json(SpeechDatabase::parse_json_file(root_ / "g2p_rules.json"));
            a.have_g2p = true;
        }
        return a;
    }

    DialogServices services(const Assets& assets) {
        DialogServices svc;
        svc.lexicon = &db_.lexicon();
        svc.render = [&assets](const std::string& intent, const Slots& slots) {
            return assets.responses.find(intent) ? generate_response(intent, slots, assets.responses) : intent;
        };
        svc.on_rejected = [this](const std::string& utt, const NBestList& nbest, const std::string& context) {
            std::unique_lock lock(store_mutex_);
            feedback_unrecognized(utt, nbest, context, db_);
            db_.save();
        };
        return svc;
    }

    static nlohmann::json turn_payload(const DialogState& st, const SystemResponse& r, const Assets& assets) {
        nlohmann::json phonemes = nullptr;
        if (assets.have_g2p) phonemes = phonemize(r.text, assets.g2p);
        return {{"intent", r.intent},
                {"response_text", r.text},
                {"phonemes", phonemes},
                {"agenda_size", st.agenda.size()},
                {"finished", st.status == SessionStatus::Finished}};
    }

    std::shared_ptr<SessionSlot> find_session(const std::string& id) const {
        std::lock_guard lock(registry_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session '" + id + "'");
        return it->second;
    }

    void purge_expired() {
        const auto now = std::chrono::steady_clock::now();
        std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->created > opt_.session_ttl; });
    }

    std::filesystem::path root_;
    ServiceOptions opt_;
    SpeechDatabase db_;
    FrontEnd frontend_;
    DecoderConfig decoder_;
    TemplateStore templates_;
    mutable std::shared_mutex store_mutex_;
    mutable std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::uint64_t session_counter_ = 0;
};

}  // namespace kidvoice
