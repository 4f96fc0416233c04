#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "kidvoice/dialog.hpp"

using namespace kidvoice;

namespace {

Lexicon colors_and_friends() {
    Lexicon lex;
    lex.add({"hello", "greeting", {}});
    lex.add({"red", "color", {}});
    lex.add({"blue", "color", {}});
    lex.add({"dog", "animal", {}});
    lex.add({"bye", "farewell", {}});
    lex.add({"rock", "thing", {}});
    return lex;
}

std::vector<HandlerSpec> greet_color_goodbye() {
    return {{"greet", {"greeting"}, "greet"}, {"ask_color", {"color"}, "ask_color"}, {"goodbye", {"farewell"}, "goodbye"}};
}

struct Fixture {
    Lexicon lex = colors_and_friends();
    std::vector<std::tuple<std::string, std::string, std::string>> rejections;
    DialogServices svc;
    Fixture() {
        svc.lexicon = &lex;
        svc.render = [](const std::string& intent, const Slots&) { return "<" + intent + ">"; };
        svc.on_rejected = [this](const std::string& utt, const NBestList& nb, const std::string& ctx) {
            rejections.emplace_back(utt, nb.top()->word, ctx);
        };
        svc.clock = [] { return 42; };
    }
};

NBestList nbest(const std::string& word, bool rejected = false) {
    NBestList nb;
    nb.hypotheses.push_back({word, 1.0, -2.0, 3.0, 1.0});
    nb.rejected = rejected;
    return nb;
}

std::vector<std::string> agenda_names(const DialogState& st) {
    std::vector<std::string> out;
    for (const auto& h : st.agenda) out.push_back(h.name);
    return out;
}

}  // namespace

TEST(InitSession, Construction) {
    Fixture f;
    const auto st = init_session(greet_color_goodbye(), "s1", f.svc);
    EXPECT_EQ(st.agenda.front().name, "greet");
    EXPECT_TRUE(transcript(st).empty());
    EXPECT_EQ(st.status, SessionStatus::Active);
    EXPECT_EQ(st.opening.intent, "greet");
    EXPECT_EQ(st.opening.text, "<greet>");

    const auto single = init_session({{"only", {"color"}, "ask"}}, "s2");
    EXPECT_EQ(single.agenda.size(), 1u);
    EXPECT_EQ(single.status, SessionStatus::Active);
}

TEST(InitSession, Errors) {
    auto code_of = [](const std::vector<HandlerSpec>& spec) {
        try {
            init_session(spec, "s");
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::IoError;
    };
    EXPECT_EQ(code_of({}), Errc::EmptyAgenda);
    EXPECT_EQ(code_of({{"a", {"x"}, "p"}, {"a", {"y"}, "q"}}), Errc::DuplicateHandlerName);
    EXPECT_EQ(code_of({{"a", {}, "p"}}), Errc::BadConfig);
}

TEST(DialogTurn, InOrderMatch) {
    Fixture f;
    auto st = init_session({{"ask_color", {"color"}, "ask_color"}, {"goodbye", {"farewell"}, "goodbye"}}, "s", f.svc);
    const auto r = dialog_turn(st, nbest("red"), f.svc);
    EXPECT_EQ(agenda_names(r.state), std::vector<std::string>{"goodbye"});
    EXPECT_EQ(r.response.intent, "goodbye");
    EXPECT_EQ(r.response.slots.at("ask_color"), "red");
    EXPECT_EQ(r.state.history.back().matched_handler, "ask_color");
    EXPECT_EQ(r.state.completed.back().captured_value, "red");
}

TEST(DialogTurn, MixedInitiativeConsumesDeeperHandler) {
    Fixture f;
    const auto st = init_session(greet_color_goodbye(), "s", f.svc);
    const auto r = dialog_turn(st, nbest("red"), f.svc);
    EXPECT_EQ(agenda_names(r.state), (std::vector<std::string>{"greet", "goodbye"}));
    EXPECT_EQ(r.response.intent, "greet");
    EXPECT_EQ(r.state.history.back().matched_handler, "ask_color");
}

TEST(DialogTurn, UnknownConceptClarifies) {
    Fixture f;
    const auto st = init_session(greet_color_goodbye(), "s", f.svc);
    for (const UserInput& in : {UserInput{nbest("rock")}, UserInput{TypedWord{"zebra"}}, UserInput{NBestList{}}}) {
        const auto r = dialog_turn(st, in, f.svc);
        EXPECT_EQ(agenda_names(r.state), agenda_names(st));
        EXPECT_EQ(r.state.history.size(), 1u);
        EXPECT_EQ(r.response.intent, kIntentClarify);
        EXPECT_EQ(r.response.slots.at("handler"), "greet");
        EXPECT_FALSE(r.state.history.back().matched_handler);
    }
}

TEST(DialogTurn, RejectionAsksToRepeatAndFilesFeedback) {
    Fixture f;
    const auto st = init_session(greet_color_goodbye(), "s9", f.svc);
    const auto r = dialog_turn(st, nbest("red", true), f.svc);
    EXPECT_EQ(r.response.intent, kIntentRepeat);
    EXPECT_EQ(agenda_names(r.state), agenda_names(st));
    ASSERT_EQ(f.rejections.size(), 1u);
    EXPECT_EQ(f.rejections[0], std::make_tuple(std::string("s9-t0"), std::string("red"), std::string("greet")));
    dialog_turn(r.state, nbest("red", true), f.svc, "utt77");
    EXPECT_EQ(std::get<0>(f.rejections[1]), "utt77");
}

TEST(DialogTurn, TypedWordAndFinish) {
    Fixture f;
    auto st = init_session(greet_color_goodbye(), "s", f.svc);
    for (const char* w : {"hello", "blue", "bye"}) st = dialog_turn(st, TypedWord{w}, f.svc).state;
    EXPECT_EQ(st.status, SessionStatus::Finished);
    EXPECT_EQ(st.history.back().system_response.intent, kIntentClose);
    try {
        dialog_turn(st, TypedWord{"hello"}, f.svc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::SessionFinished);
    }
}

TEST(Transcript, IndicesAndTimestamps) {
    Fixture f;
    auto st = init_session(greet_color_goodbye(), "s", f.svc);
    EXPECT_TRUE(transcript(st).empty());
    st = dialog_turn(st, nbest("rock"), f.svc).state;
    st = dialog_turn(st, nbest("hello"), f.svc).state;
    ASSERT_EQ(transcript(st).size(), 2u);
    EXPECT_EQ(transcript(st)[0].index, 0u);
    EXPECT_EQ(transcript(st)[1].index, 1u);
    EXPECT_EQ(transcript(st)[1].timestamp, 42);
    const auto j = transcript_to_json(st);
    EXPECT_EQ(j.at("turns").size(), 2u);
    EXPECT_EQ(j.at("turns")[1].at("matched_handler"), "greet");
    EXPECT_TRUE(j.at("turns")[0].at("matched_handler").is_null());
}

TEST(DialogProperty, AgendaAndHistoryMonotone) {
    std::mt19937_64 rng(6);
    const std::vector<std::string> vocab{"hello", "red", "blue", "dog", "bye", "rock", "zzz"};
    for (int trial = 0; trial < 300; ++trial) {
        Fixture f;
        std::vector<HandlerSpec> spec{{"greet", {"greeting"}, "greet"},
                                      {"ask_color", {"color"}, "ask_color"},
                                      {"ask_animal", {"animal"}, "ask_animal"},
                                      {"goodbye", {"farewell"}, "goodbye"}};
        std::shuffle(spec.begin(), spec.end(), rng);
        spec.resize(1 + rng() % spec.size());
        const std::size_t n = spec.size();
        auto st = init_session(spec, "s", f.svc);
        std::size_t matches = 0;
        while (st.status == SessionStatus::Active) {
            const std::size_t before = st.agenda.size(), hist = st.history.size();
            UserInput in;
            const auto& word = vocab[rng() % vocab.size()];
            if (rng() % 4 == 0) in = nbest(word, true);
            else if (rng() % 2) in = TypedWord{word};
            else in = nbest(word);
            st = dialog_turn(st, in, f.svc).state;
            ASSERT_EQ(st.history.size(), hist + 1);
            const bool matched = st.history.back().matched_handler.has_value();
            ASSERT_EQ(st.agenda.size(), before - (matched ? 1 : 0));
            matches += matched;
            ASSERT_EQ(st.status == SessionStatus::Finished, st.agenda.empty());
        }
        ASSERT_EQ(matches, n);
        for (std::size_t i = 0; i < st.history.size(); ++i) ASSERT_EQ(st.history[i].index, i);
    }
}

TEST(AgendaJson, ListAndObjectForms) {
    const auto list = agenda_from_json(nlohmann::json::parse(
        R"([{"name":"greet","expected_concepts":["greeting"],"prompt_intent":"greet"}])"));
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(list[0].expected_concepts, std::set<std::string>{"greeting"});
    const auto obj = agenda_from_json(nlohmann::json::parse(
        R"({"handlers":[{"name":"a","expected_concepts":["x","y"],"prompt_intent":"p"}]})"));
    EXPECT_EQ(obj[0].expected_concepts.size(), 2u);
    EXPECT_THROW(agenda_from_json(nlohmann::json::parse(R"([{"name":"a"}])")), Error);
}

TEST(NBestJson, RoundTrip) {
    auto nb = nbest("red", true);
    nb.hypotheses.push_back({"blue", 1.5, -2.5, 4.0, 0.9});
    const auto back = nbest_from_json(nbest_to_json(nb));
    ASSERT_EQ(back.hypotheses.size(), 2u);
    EXPECT_EQ(back.hypotheses[1].word, "blue");
    EXPECT_EQ(back.hypotheses[1].best_warp, 0.9);
    EXPECT_TRUE(back.rejected);
    EXPECT_THROW(nbest_from_json(nlohmann::json::parse(R"({"hypotheses":[{}]})")), Error);
}
