#pragma once

// Agenda-based dialog control. The agenda is an ordered stack of handlers
// (index 0 is the top). Each turn the top hypothesis is mapped to its concept
// tag and the first handler, scanning top-down, that expects that concept
// consumes it. Handlers above the consumer stay put, which lets the user
// answer a question other than the one just asked.
//
// The manager only ever sees recognition results or typed words.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "kidvoice/clock.hpp"
#include "kidvoice/error.hpp"
#include "kidvoice/recognizer.hpp"
#include "kidvoice/speech_output.hpp"
#include "kidvoice/vocabulary.hpp"

namespace kidvoice {

struct HandlerSpec {
    std::string name;
    std::set<std::string> expected_concepts;
    std::string prompt_intent;
};

struct Handler {
    std::string name;
    std::set<std::string> expected_concepts;
    std::string prompt;  ///< prompt intent id
    bool completed = false;
    std::optional<std::string> captured_value;
};

struct SystemResponse {
    std::string intent;
    Slots slots;
    std::string text;
};

struct TypedWord {
    std::string word;
};

using UserInput = std::variant<NBestList, TypedWord>;

struct Turn {
    std::size_t index = 0;
    UserInput user_input;
    std::optional<std::string> matched_handler;
    SystemResponse system_response;
    std::int64_t timestamp = 0;
};

enum class SessionStatus { Active, Finished };

struct DialogState {
    std::string session_id;
    std::vector<Handler> agenda;     ///< pending handlers, top first
    std::vector<Handler> completed;  ///< in completion order
    std::vector<Turn> history;
    SessionStatus status = SessionStatus::Active;
    SystemResponse opening;
};

/// Hooks the manager needs from the rest of the system. All optional except
/// the lexicon.
struct DialogServices {
    const Lexicon* lexicon = nullptr;
    /// Renders an intent to text; when unset the text is left empty.
    std::function<std::string(const std::string& intent, const Slots& slots)> render;
    /// Called for rejected input with (utterance_id, nbest, context handler).
    std::function<void(const std::string&, const NBestList&, const std::string&)> on_rejected;
    std::function<std::int64_t()> clock;
};

struct TurnResult {
    SystemResponse response;
    DialogState state;
};

inline std::vector<HandlerSpec> agenda_from_json(const nlohmann::json& j) {
    std::vector<HandlerSpec> out;
    try {
        const auto& list = j.is_object() ? j.at("handlers") : j;
        for (const auto& h : list)
            out.push_back({h.at("name").get<std::string>(), h.at("expected_concepts").get<std::set<std::string>>(),
                           h.at("prompt_intent").get<std::string>()});
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("agenda spec: ") + ex.what());
    }
    return out;
}

namespace detail {

inline Slots response_slots(const DialogState& st) {
    Slots slots;
    for (const auto& h : st.completed)
        if (h.captured_value) slots[h.name] = *h.captured_value;
    if (!st.agenda.empty()) slots["handler"] = st.agenda.front().name;
    return slots;
}

inline SystemResponse respond(const std::string& intent, Slots slots, const DialogServices& svc) {
    SystemResponse r{intent, std::move(slots), {}};
    if (svc.render) r.text = svc.render(r.intent, r.slots);
    return r;
}

}  // namespace detail

inline DialogState init_session(const std::vector<HandlerSpec>& spec, std::string session_id,
                                const DialogServices& svc = {}) {
    if (spec.empty()) throw Error(Errc::EmptyAgenda, "agenda spec has no handlers");
    std::set<std::string> names;
    DialogState st;
    st.session_id = std::move(session_id);
    for (const auto& h : spec) {
        if (!names.insert(h.name).second) throw Error(Errc::DuplicateHandlerName, h.name);
        if (h.expected_concepts.empty())
            throw Error(Errc::BadConfig, "handler '" + h.name + "' expects no concepts");
        st.agenda.push_back({h.name, h.expected_concepts, h.prompt_intent, false, std::nullopt});
    }
    st.opening = detail::respond(st.agenda.front().prompt, detail::response_slots(st), svc);
    return st;
}

/// Advances the session by one user input. Every call appends exactly one
/// turn to the history.
inline TurnResult dialog_turn(const DialogState& state, const UserInput& input, const DialogServices& svc,
                              const std::string& utterance_id = {}) {
    if (state.status == SessionStatus::Finished)
        throw Error(Errc::SessionFinished, "session " + state.session_id + " is finished");

    DialogState next = state;
    std::optional<std::string> matched;
    std::string intent;

    const auto* nbest = std::get_if<NBestList>(&input);
    if (nbest && nbest->rejected) {
        const std::string& context = next.agenda.front().name;
        if (svc.on_rejected) {
            const std::string utt = utterance_id.empty()
                                        ? next.session_id + "-t" + std::to_string(next.history.size())
                                        : utterance_id;
            svc.on_rejected(utt, *nbest, context);
        }
        intent = kIntentRepeat;
    } else {
        std::optional<std::string> word;
        if (nbest) {
            if (const auto* top = nbest->top()) word = top->word;
        } else {
            word = std::get<TypedWord>(input).word;
        }
        std::optional<std::string> concept_tag;
        if (word && svc.lexicon) concept_tag = svc.lexicon->concept_of(*word);

        auto it = next.agenda.end();
        if (concept_tag)
            it = std::find_if(next.agenda.begin(), next.agenda.end(),
                              [&](const Handler& h) { return h.expected_concepts.count(*concept_tag) != 0; });
        if (it != next.agenda.end()) {
            Handler done = *it;
            done.completed = true;
            done.captured_value = *word;
            matched = done.name;
            next.agenda.erase(it);
            next.completed.push_back(std::move(done));
            if (next.agenda.empty()) {
                next.status = SessionStatus::Finished;
                intent = kIntentClose;
            } else {
                intent = next.agenda.front().prompt;
            }
        } else {
            intent = kIntentClarify;
        }
    }

    SystemResponse response = detail::respond(intent, detail::response_slots(next), svc);
    next.history.push_back(
        {next.history.size(), input, matched, response, svc.clock ? svc.clock() : system_clock_ms()});
    return {std::move(response), std::move(next)};
}

inline const std::vector<Turn>& transcript(const DialogState& state) { return state.history; }

inline nlohmann::json nbest_to_json(const NBestList& nb) {
    nlohmann::json hyps = nlohmann::json::array();
    for (const auto& h : nb.hypotheses)
        hyps.push_back({{"word", h.word},
                        {"acoustic_cost", h.acoustic_cost},
                        {"lm_logprob", h.lm_logprob},
                        {"combined_score", h.combined_score},
                        {"best_warp", h.best_warp}});
    return {{"hypotheses", hyps}, {"rejected", nb.rejected}};
}

inline NBestList nbest_from_json(const nlohmann::json& j) {
    NBestList nb;
    try {
        for (const auto& h : j.at("hypotheses"))
            nb.hypotheses.push_back({h.at("word").get<std::string>(), h.value("acoustic_cost", 0.0),
                                     h.value("lm_logprob", 0.0), h.value("combined_score", 0.0),
                                     h.value("best_warp", 1.0)});
        nb.rejected = j.value("rejected", false);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(Errc::ParseError, std::string("nbest: ") + ex.what());
    }
    return nb;
}

inline nlohmann::json turn_to_json(const Turn& t) {
    nlohmann::json input;
    if (const auto* nb = std::get_if<NBestList>(&t.user_input)) {
        input = nbest_to_json(*nb);
        input["type"] = "nbest";
    } else {
        input = {{"type", "text"}, {"word", std::get<TypedWord>(t.user_input).word}};
    }
    return {{"index", t.index},
            {"user_input", input},
            {"matched_handler", t.matched_handler ? nlohmann::json(*t.matched_handler) : nlohmann::json(nullptr)},
            {"system_response",
             {{"intent", t.system_response.intent},
              {"slots", t.system_response.slots},
              {"text", t.system_response.text}}},
            {"timestamp", t.timestamp}};
}

inline nlohmann::json transcript_to_json(const DialogState& st) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : transcript(st)) turns.push_back(turn_to_json(t));
    return {{"session_id", st.session_id},
            {"opening", {{"intent", st.opening.intent}, {"text", st.opening.text}}},
            {"status", st.status == SessionStatus::Active ? "active" : "finished"},
            {"agenda_size", st.agenda.size()},
            {"turns", turns}};
}

}  // namespace kidvoice
