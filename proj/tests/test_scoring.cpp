#include "ecc/scoring.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace ecc;

namespace {

struct GoldenPair {
    std::string a;
    std::string b;
    double expected;
};

std::vector<GoldenPair> load_golden() {
    std::vector<GoldenPair> out;
    std::istringstream in(test::read_file(test::source_path("tests/data/bigram_cosine_golden.jsonl")));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        out.push_back({j.at("a"), j.at("b"), std::stod(j.at("expected").get<std::string>())});
    }
    return out;
}

EvalConfig eval(double alpha, double theta) {
    EvalConfig c;
    c.alpha = alpha;
    c.theta = theta;
    return c;
}

}  // namespace

TEST(Embedding, Fnv1aVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Embedding, ShortTextsEmbedEmpty) {
    EXPECT_TRUE(embed("a").values.empty());
    EXPECT_TRUE(embed("").values.empty());
    EXPECT_EQ(embed("aaa").values.size(), 1u);
    EXPECT_DOUBLE_EQ(embed("aaa").values.begin()->second, 2.0);
}

TEST(Scoring, BigramGolden) {
    auto golden = load_golden();
    ASSERT_GE(golden.size(), 20u);
    NgramCosineScorer scorer;
    for (const auto& g : golden) {
        EXPECT_NEAR(scorer.score(g.a, g.b), g.expected, 1e-9) << g.a << " | " << g.b;
    }
}

TEST(Scoring, AbabAbIsTwoOverRootFive) {
    EXPECT_NEAR(similarity_score("abab", "ab"), 2.0 / std::sqrt(5.0), 1e-12);
}

TEST(Scoring, IdentityDisjointEmpty) {
    EXPECT_EQ(similarity_score("hello", "hello"), 1.0);
    EXPECT_EQ(similarity_score("abc", "xyz"), 0.0);
    EXPECT_EQ(relevance_score("520401029636", "Hello"), 0.0);
    EXPECT_EQ(relevance_score("", "anything"), 0.0);
    EXPECT_EQ(similarity_score("", ""), 0.0);
    EXPECT_EQ(similarity_score(" a  b ", "a b"), 1.0);
}

TEST(Scoring, SymmetricAndInRange) {
    std::mt19937_64 rng(5);
    NgramCosineScorer scorer;
    for (int i = 0; i < 2000; ++i) {
        auto a = test::random_unicode(rng, 20);
        auto b = test::random_unicode(rng, 20);
        double ab = scorer.score(a, b);
        ASSERT_GE(ab, 0.0);
        ASSERT_LE(ab, 1.0);
        ASSERT_EQ(ab, scorer.score(b, a));
    }
}

TEST(Scoring, CombineExamples) {
    auto b = combine_scores(0.5, 0.25, 0.9, eval(0.8, 0.2));
    EXPECT_NEAR(b.final_score, 0.45, 1e-12);
    EXPECT_FALSE(b.theta_fallback_applied);

    b = combine_scores(0.7, 0.9, 0.1, eval(0.8, 0.2));
    EXPECT_EQ(b.final_score, 0.7);
    EXPECT_TRUE(b.theta_fallback_applied);

    b = combine_scores(0.844, 0.1, 0.05, eval(0.8, 0.2));
    EXPECT_EQ(b.final_score, 0.844);
}

TEST(Scoring, ThetaComparisonIsStrict) {
    auto b = combine_scores(0.6, 0.1, 0.2, eval(0.8, 0.2));
    EXPECT_FALSE(b.theta_fallback_applied);
    EXPECT_NEAR(b.final_score, 0.8 * 0.6 + 0.2 * 0.1, 1e-12);
}

TEST(Scoring, OutOfRangeRejected) {
    EXPECT_THROW(combine_scores(1.1, 0, 0, EvalConfig{}), ScoringError);
    EXPECT_THROW(combine_scores(0, -0.1, 0, EvalConfig{}), ScoringError);
    EXPECT_THROW(combine_scores(0, 0, NAN, EvalConfig{}), ScoringError);
    EXPECT_THROW(combine_scores(0, 0, 0, eval(1.5, 0.2)), ScoringError);
    EXPECT_THROW(combine_scores(0, 0, 0, eval(0.8, -1)), ScoringError);
}

TEST(Scoring, CompositeProperties) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double sim = u(rng), re = u(rng), rc = u(rng), alpha = u(rng), theta = u(rng);
        auto b = combine_scores(sim, re, rc, eval(alpha, theta));
        ASSERT_GE(b.final_score, 0.0);
        ASSERT_LE(b.final_score, 1.0);
        ASSERT_EQ(b.theta_fallback_applied, rc < theta);
        if (b.theta_fallback_applied) {
            ASSERT_EQ(b.final_score, sim);
        } else {
            ASSERT_NEAR(b.final_score, alpha * sim + (1 - alpha) * re, 1e-12);
        }
        ASSERT_EQ(combine_scores(sim, re, rc, eval(1.0, theta)).final_score, sim);
        if (rc >= theta) {
            ASSERT_EQ(combine_scores(sim, re, rc, eval(0.0, theta)).final_score, re);
        }
        if (!b.theta_fallback_applied && alpha > 0.01 && alpha < 0.99) {
            const double d = 1e-3;
            if (sim + d <= 1.0) {
                ASSERT_GT(combine_scores(sim + d, re, rc, eval(alpha, theta)).final_score, b.final_score);
            }
            if (re + d <= 1.0) {
                ASSERT_GT(combine_scores(sim, re + d, rc, eval(alpha, theta)).final_score, b.final_score);
            }
        }
    }
}

TEST(Scoring, EvaluateResponseGolden) {
    // Same pair as the golden file row; 5/24 in exact arithmetic.
    NgramCosineScorer s;
    const std::string end = "Hello! I'm the AI assistant ChatGLM3-6B, nice to meet you, feel free to ask me any questions.";
    auto b = evaluate_response("Hello", end, "Hello", EvalConfig{}, s, s);
    EXPECT_NEAR(b.sim, 0.208333333333333333, 1e-12);
    EXPECT_NEAR(b.rel_end, 0.208333333333333333, 1e-12);
    EXPECT_EQ(b.rel_cloud, 1.0);
    EXPECT_FALSE(b.theta_fallback_applied);
    EXPECT_NEAR(b.final_score, 0.208333333333333333, 1e-12);
    EXPECT_EQ(b.alpha, 0.8);
    EXPECT_EQ(b.theta, 0.2);
}

TEST(Scoring, EvaluateIdenticalOutputs) {
    NgramCosineScorer s;
    auto b = evaluate_response("ship today?", "we ship today", "we ship today", EvalConfig{}, s, s);
    EXPECT_EQ(b.sim, 1.0);
    ASSERT_FALSE(b.theta_fallback_applied);
    EXPECT_NEAR(b.final_score, 0.8 + 0.2 * b.rel_end, 1e-12);
}

TEST(Scoring, ScriptedFallbackGivesPublishedHelloScore) {
    FunctionScorer sim("sim", [](auto, auto) { return 0.844; });
    FunctionScorer rel("rel", [](auto, auto) { return 0.1; });
    auto b = evaluate_response("Hello", "x", "y", EvalConfig{}, sim, rel);
    EXPECT_TRUE(b.theta_fallback_applied);
    EXPECT_EQ(b.final_score, 0.844);
}

TEST(Scoring, EvaluateRejectsEmptyQueryAndPropagatesFaults) {
    NgramCosineScorer s;
    EXPECT_THROW(evaluate_response("  ", "a", "b", EvalConfig{}, s, s), ScoringError);
    FunctionScorer bad("bad", [](auto, auto) -> double { throw std::runtime_error("remote scorer down"); });
    EXPECT_THROW(evaluate_response("q", "a", "b", EvalConfig{}, bad, s), std::runtime_error);
    FunctionScorer wild("wild", [](auto, auto) { return 2.0; });
    EXPECT_THROW(evaluate_response("q", "a", "b", EvalConfig{}, wild, s), ScoringError);
}

TEST(Scoring, TableScorerLookupAndFallback) {
    TableScorer t({{{"a", "b"}, 0.25}}, nullptr, 0.5);
    EXPECT_EQ(t.score("a", "b"), 0.25);
    EXPECT_EQ(t.score("b", "a"), 0.5);
    TableScorer f({{{"a", "b"}, 0.25}}, std::make_shared<NgramCosineScorer>());
    EXPECT_EQ(f.score("xy", "xy"), 1.0);
}

TEST(Scoring, Registry) {
    auto r = ScorerRegistry::with_builtins();
    EXPECT_EQ(r.names(), (std::vector<std::string>{"ngram-cosine", "ngram-cosine-3"}));
    EXPECT_NEAR(r.create("ngram-cosine")->score("abab", "ab"), 2.0 / std::sqrt(5.0), 1e-12);
    EXPECT_EQ(r.create("ngram-cosine-3")->score("abab", "ab"), 0.0);
    EXPECT_THROW(r.create("simbert"), ScoringError);
    r.add("const", [] { return std::make_shared<FunctionScorer>("const", [](auto, auto) { return 0.3; }); });
    EXPECT_TRUE(r.contains("const"));
    EXPECT_EQ(r.create("const")->score("x", "y"), 0.3);
}
