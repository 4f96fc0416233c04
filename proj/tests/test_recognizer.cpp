#include <gtest/gtest.h>

#include <random>

#include "kidvoice/recognizer.hpp"
#include "oracles.hpp"

using namespace kidvoice;

namespace {

Matrix to_matrix(const oracle::Seq& s) {
    Matrix m(s.size(), s.empty() ? 0 : s[0].size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t k = 0; k < s[i].size(); ++k) m(i, k) = s[i][k];
    return m;
}

FeatureMatrix column(std::initializer_list<double> v) { return {Matrix(v.size(), 1, std::vector<double>(v)), ""}; }

Lexicon lexicon_of(std::initializer_list<const char*> words) {
    Lexicon lex;
    for (const char* w : words) lex.add({w, "", {}});
    return lex;
}

class ConstantScorer final : public WordScorer {
public:
    explicit ConstantScorer(std::map<std::string, double> cost) : cost_(std::move(cost)) {}
    double score(const FeatureMatrix&, std::span<const Template> templates) const override {
        return cost_.at(templates.front().word);
    }

private:
    std::map<std::string, double> cost_;
};

struct MockRecorder {
    std::vector<std::tuple<std::string, std::string, std::string>> calls;
    std::map<std::pair<std::string, std::string>, std::int64_t> counts;
    AssociationEntry record_association(const std::string& utt, const std::string& kw, const std::string& ctx) {
        calls.emplace_back(utt, kw, ctx);
        return {utt, kw, ctx, ++counts[{kw, ctx}], 0};
    }
};

}  // namespace

TEST(Dtw, Examples) {
    EXPECT_DOUBLE_EQ(dtw_distance(column({1, 2, 3}), column({1, 2, 3}), 0.2), 0.0);
    EXPECT_NEAR(dtw_distance(column({1, 2, 3}), column({1, 3}), 0.2), 0.2, 1e-12);
    EXPECT_DOUBLE_EQ(dtw_distance(column({1}), column({1, 1, 1, 1}), 0.0), 0.0);
}

TEST(Dtw, BandWidth) {
    EXPECT_EQ(dtw_band_width(1, 4, 0.0), 4u);
    EXPECT_EQ(dtw_band_width(10, 10, 0.2), 2u);
    EXPECT_EQ(dtw_band_width(100, 90, 0.2), 20u);
    EXPECT_EQ(dtw_band_width(5, 5, 0.0), 1u);
}

TEST(Dtw, Errors) {
    try {
        dtw_distance(Matrix(0, 2), Matrix(3, 2), 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptySequence);
    }
    try {
        dtw_distance(Matrix(2, 2), Matrix(3, 3), 0.2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimMismatch);
    }
}

TEST(Dtw, MatchesExhaustiveEnumeration) {
    std::mt19937_64 rng(2024);
    for (int pair = 0; pair < 500; ++pair) {
        const std::size_t dim = 1 + rng() % 2;
        const auto a = oracle::random_sequence(rng, 1 + rng() % 6, dim);
        const auto b = oracle::random_sequence(rng, 1 + rng() % 6, dim);
        const double bf = (rng() % 5) / 4.0;
        const std::size_t band = dtw_band_width(a.size(), b.size(), bf);
        ASSERT_NEAR(dtw_distance(to_matrix(a), to_matrix(b), bf), oracle::brute_force_dtw(a, b, band), 1e-9)
            << "pair " << pair;
    }
}

TEST(Dtw, SymmetricAndZeroOnSelf) {
    std::mt19937_64 rng(99);
    for (int t = 0; t < 200; ++t) {
        const std::size_t dim = 1 + rng() % 13;
        const Matrix a = to_matrix(oracle::random_sequence(rng, 1 + rng() % 40, dim));
        const Matrix b = to_matrix(oracle::random_sequence(rng, 1 + rng() % 40, dim));
        ASSERT_NEAR(dtw_distance(a, b, 0.2), dtw_distance(b, a, 0.2), 1e-9);
        ASSERT_EQ(dtw_distance(a, a, 0.2), 0.0);
        ASSERT_GE(dtw_distance(a, b, 0.2), 0.0);
    }
}

TEST(TemplateStoreTest, EnrollAndCount) {
    TemplateStore db(lexicon_of({"mama", "ball"}));
    for (int i = 0; i < 3; ++i) enroll_template(column({1.0 * i}), "mama", "spk1", db);
    EXPECT_EQ(db.count("mama"), 3u);
    EXPECT_EQ(db.count("ball"), 0u);
    EXPECT_EQ(db.size(), 3u);
    try {
        enroll_template(column({1}), "zebra", "spk1", db);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownWord);
    }
}

TEST(Recognize, IdentityMatch) {
    TemplateStore db(lexicon_of({"mama", "ball"}));
    enroll_template(column({1, 2, 3}), "mama", "s", db);
    enroll_template(column({5, 5, 6}), "ball", "s", db);
    const UnigramModel lm({"mama", "ball"}, {});
    const auto nbest = recognize(column({1, 2, 3}), db, lm, DecoderConfig{});
    ASSERT_EQ(nbest.hypotheses.size(), 2u);
    EXPECT_EQ(nbest.top()->word, "mama");
    EXPECT_EQ(nbest.top()->acoustic_cost, 0.0);
}

TEST(Recognize, LanguageModelBreaksAcousticTie) {
    TemplateStore db(lexicon_of({"a", "b"}));
    enroll_template(column({0}), "a", "s", db);
    enroll_template(column({0}), "b", "s", db);
    const UnigramModel lm({"a", "b"}, {{"a", 1}, {"b", 0}});
    ASSERT_DOUBLE_EQ(lm.prob("a"), 0.5);
    ASSERT_DOUBLE_EQ(lm.prob("b"), 0.25);
    DecoderConfig cfg;
    cfg.lambda = 0.1;
    const WarpedFeatures in{1.0, column({0})};
    const auto nbest = recognize(std::span(&in, 1), db, lm, cfg, ConstantScorer({{"a", 0.2}, {"b", 0.2}}));
    EXPECT_EQ(nbest.hypotheses[0].word, "a");
    EXPECT_NEAR(nbest.hypotheses[0].combined_score, 0.2693, 1e-4);
    EXPECT_NEAR(nbest.hypotheses[1].combined_score, 0.3386, 1e-4);
    EXPECT_FALSE(nbest.rejected);
}

TEST(Recognize, RejectionKeepsHypotheses) {
    TemplateStore db(lexicon_of({"a", "b"}));
    enroll_template(column({0}), "a", "s", db);
    enroll_template(column({9}), "b", "s", db);
    DecoderConfig cfg;
    cfg.tau = 1.0;
    const auto nbest = recognize(column({40}), db, UnigramModel({"a", "b"}, {}), cfg);
    EXPECT_TRUE(nbest.rejected);
    EXPECT_EQ(nbest.hypotheses.size(), 2u);
}

TEST(Recognize, EmptyStore) {
    TemplateStore db(lexicon_of({"a"}));
    try {
        recognize(column({0}), db, UnigramModel({"a"}, {}), DecoderConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyTemplateStore);
    }
}

TEST(Recognize, NBestTruncation) {
    TemplateStore db(lexicon_of({"a", "b", "c"}));
    for (const char* w : {"a", "b", "c"}) enroll_template(column({1}), w, "s", db);
    DecoderConfig cfg;
    cfg.n_best = 2;
    EXPECT_EQ(recognize(column({1}), db, UnigramModel({"a", "b", "c"}, {}), cfg).hypotheses.size(), 2u);
}

TEST(Recognize, RankingProperties) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> cost(0.0, 3.0);
    const std::vector<std::string> words{"a", "b", "c", "d", "e"};
    Lexicon lex;
    for (const auto& w : words) lex.add({w, "", {}});
    TemplateStore db(lex);
    for (const auto& w : words) enroll_template(column({0}), w, "s", db);
    const WarpedFeatures in{1.0, column({0})};
    for (int t = 0; t < 200; ++t) {
        std::map<std::string, double> costs;
        std::map<std::string, std::int64_t> counts, shifted;
        for (const auto& w : words) {
            costs[w] = cost(rng);
            counts[w] = static_cast<std::int64_t>(rng() % 50);
        }
        DecoderConfig cfg;
        cfg.lambda = 0.0;
        const ConstantScorer scorer(costs);
        const auto lm = UnigramModel(words, counts);
        const auto nbest = recognize(std::span(&in, 1), db, lm, cfg, scorer);
        for (std::size_t r = 1; r < nbest.hypotheses.size(); ++r)
            ASSERT_LE(nbest.hypotheses[r - 1].acoustic_cost, nbest.hypotheses[r].acoustic_cost);

        cfg.lambda = 0.5 + (rng() % 10) / 10.0;
        const auto a = recognize(std::span(&in, 1), db, lm, cfg, scorer);
        for (const auto& h : a.hypotheses)
            ASSERT_NEAR(h.combined_score, h.acoustic_cost - cfg.lambda * h.lm_logprob, 1e-12);
        // uniform shift of every log prior: equal multiplicative scaling of (c+1)
        for (const auto& w : words) shifted[w] = (counts[w] + 1) * 3 - 1;
        UnigramModel scaled(words, shifted);
        const auto b = recognize(std::span(&in, 1), db, scaled, cfg, scorer);
        ASSERT_EQ(a.top()->word, b.top()->word);
    }
}

TEST(Recognize, SingleWarpGridEqualsNoSearch) {
    TemplateStore db(lexicon_of({"a", "b"}));
    enroll_template(column({1, 2, 3, 4}), "a", "s", db);
    enroll_template(column({4, 3, 2}), "b", "s", db);
    const UnigramModel lm({"a", "b"}, {{"a", 3}});
    const auto in = column({1, 3, 3});
    const auto direct = recognize(in, db, lm, DecoderConfig{});
    const std::vector<WarpedFeatures> grid{{1.0, in}};
    const auto searched = recognize(grid, db, lm, DecoderConfig{});
    ASSERT_EQ(direct.hypotheses.size(), searched.hypotheses.size());
    for (std::size_t i = 0; i < direct.hypotheses.size(); ++i) {
        EXPECT_EQ(direct.hypotheses[i].word, searched.hypotheses[i].word);
        EXPECT_EQ(direct.hypotheses[i].combined_score, searched.hypotheses[i].combined_score);
    }
}

TEST(Recognize, WarpSearchTakesMinimumPerWord) {
    TemplateStore db(lexicon_of({"a"}));
    enroll_template(column({1, 2}), "a", "s", db);
    const std::vector<WarpedFeatures> grid{{0.9, column({5, 5})}, {1.1, column({1, 2})}};
    const auto nbest = recognize(grid, db, UnigramModel({"a"}, {}), DecoderConfig{});
    EXPECT_EQ(nbest.top()->acoustic_cost, 0.0);
    EXPECT_EQ(nbest.top()->best_warp, 1.1);
}

TEST(Feedback, FilesRejectedResult) {
    NBestList nbest;
    nbest.hypotheses = {{"grandma", 9.0, -1.0, 10.0, 1.0}, {"mama", 9.5, -1.0, 10.5, 1.0}};
    nbest.rejected = true;
    MockRecorder store;
    int events = 0;
    const auto e = feedback_unrecognized("utt9", nbest, "ask_family", store, [&](const AssociationEntry&) { ++events; });
    EXPECT_EQ(e.keyword, "grandma");
    EXPECT_EQ(e.context, "ask_family");
    EXPECT_EQ(e.count, 1);
    EXPECT_EQ(feedback_unrecognized("utt10", nbest, "ask_family", store).count, 2);
    EXPECT_EQ(events, 1);
    nbest.rejected = false;
    try {
        feedback_unrecognized("utt11", nbest, "ask_family", store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotRejected);
    }
    EXPECT_EQ(store.calls.size(), 2u);
}
