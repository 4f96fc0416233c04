#include <gtest/gtest.h>

#include <random>

#include "kidvoice/language_model.hpp"

using namespace kidvoice;

namespace {

Lexicon lexicon_of(std::initializer_list<const char*> words) {
    Lexicon lex;
    for (const char* w : words) lex.add({w, "", {}});
    return lex;
}

double total_mass(const UnigramModel& m) {
    double s = m.unk_prob();
    for (const auto& w : m.vocab()) s += m.prob(w);
    return s;
}

}  // namespace

TEST(Unigram, AddOneNormalization) {
    const auto lm = train_unigram(parse_frequency_tsv("mama\t3\nball\t1\n"), lexicon_of({"mama", "ball"}));
    EXPECT_EQ(lm.denominator(), 7.0);
    EXPECT_NEAR(lm.prob("mama"), 4.0 / 7.0, 1e-15);
    EXPECT_NEAR(lm.prob("ball"), 2.0 / 7.0, 1e-15);
    EXPECT_NEAR(lm.unk_prob(), 1.0 / 7.0, 1e-15);
    EXPECT_NEAR(total_mass(lm), 1.0, 1e-12);
}

TEST(Unigram, ZeroCountsAreUniform) {
    const auto lm = train_unigram({}, lexicon_of({"a", "b", "c"}));
    for (const char* w : {"a", "b", "c"}) EXPECT_DOUBLE_EQ(lm.prob(w), 0.25);
    EXPECT_DOUBLE_EQ(lm.unk_prob(), 0.25);
}

TEST(Unigram, OutOfVocabularyUsesUnk) {
    const auto lm = train_unigram(parse_frequency_tsv("a\t1\nb\t0\n"), lexicon_of({"a", "b"}));
    EXPECT_NEAR(log_prob(lm, "a"), -0.6931, 1e-4);
    EXPECT_EQ(log_prob(lm, "xyz"), std::log(lm.unk_prob()));
    EXPECT_EQ(lm.prob(kUnkToken), lm.unk_prob());
}

TEST(Unigram, LexiconOnlyWordsAndEmptyLexicon) {
    const auto lm = train_unigram(parse_frequency_tsv("zebra\t100\n"), lexicon_of({"a"}));
    EXPECT_FALSE(lm.contains("zebra"));
    EXPECT_DOUBLE_EQ(lm.prob("a"), 0.5);
    try {
        train_unigram({}, Lexicon{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyLexicon);
    }
}

TEST(Adaptation, AddsAssociationCounts) {
    const auto base = train_unigram(parse_frequency_tsv("mama\t3\ngrandma\t0\n"), lexicon_of({"mama", "grandma"}));
    const std::vector<AssociationEntry> assoc{{"u1", "grandma", "ask_family", 2, 0}};
    const auto adapted = adapt_with_associations(base, assoc);
    EXPECT_EQ(adapted.counts().at("grandma"), 2);
    const auto retrained = train_unigram(parse_frequency_tsv("mama\t3\ngrandma\t2\n"), lexicon_of({"mama", "grandma"}));
    for (const char* w : {"mama", "grandma", "other"}) EXPECT_DOUBLE_EQ(adapted.prob(w), retrained.prob(w));
    EXPECT_EQ(base.counts().at("grandma"), 0);  // input untouched
}

TEST(Adaptation, EmptyListAndUnknownKeyword) {
    const auto base = train_unigram(parse_frequency_tsv("a\t3\n"), lexicon_of({"a", "b"}));
    const auto same = adapt_with_associations(base, {});
    for (const char* w : {"a", "b", "zz"}) EXPECT_EQ(same.prob(w), base.prob(w));
    const std::vector<AssociationEntry> bad{{"u", "zebra", "x", 1, 0}};
    try {
        adapt_with_associations(base, bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownKeyword);
    }
}

TEST(Unigram, MassAndMonotonicityProperty) {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 300; ++t) {
        std::vector<std::string> vocab;
        std::map<std::string, std::int64_t> counts;
        const std::size_t n = 1 + rng() % 20;
        for (std::size_t i = 0; i < n; ++i) {
            vocab.push_back("w" + std::to_string(i));
            counts[vocab.back()] = static_cast<std::int64_t>(rng() % 1000);
        }
        const UnigramModel lm(vocab, counts);
        ASSERT_NEAR(total_mass(lm), 1.0, 1e-9);
        for (const auto& w : vocab) {
            ASSERT_GT(lm.prob(w), 0.0);
            ASSERT_LT(lm.log_prob(w), 0.0);
        }
        std::vector<AssociationEntry> assoc;
        const std::string boosted = vocab[rng() % n];
        assoc.push_back({"u", boosted, "ctx", 1 + static_cast<std::int64_t>(rng() % 10), 0});
        const auto adapted = adapt_with_associations(lm, assoc);
        ASSERT_NEAR(total_mass(adapted), 1.0, 1e-9);
        ASSERT_GE(adapted.log_prob(boosted), lm.log_prob(boosted));
    }
}

TEST(Unigram, JsonRoundTrip) {
    const UnigramModel lm({"mama", "ball"}, {{"mama", 12}, {"ball", 3}});
    const auto j = unigram_to_json(lm);
    const auto back = unigram_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.vocab(), lm.vocab());
    EXPECT_EQ(back.counts(), lm.counts());
    EXPECT_EQ(back.prob("mama"), lm.prob("mama"));
    EXPECT_EQ(unigram_to_json(back).dump(), j.dump());
    EXPECT_THROW(unigram_from_json(nlohmann::json::parse(R"({"vocab":["a"]})")), Error);
    EXPECT_THROW(unigram_from_json(nlohmann::json::parse(R"({"vocab":["a"],"counts":{"b":1}})")), Error);
}
