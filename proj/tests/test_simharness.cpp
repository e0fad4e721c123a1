#include "ecc/simharness.hpp"

#include "ecc/text.hpp"

#include "sim_fixture.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ecc;
using nlohmann::json;

namespace {

const std::vector<std::string> kTable5Columns = {"Original",  "Prefix-Tuning-3000", "P-Tuning-v2-3000",
                                                 "LoRA-3000", "LoRA-5000",          "LoRA-15000"};

using Strings = std::vector<std::string>;

}  // namespace

TEST(Simulation, HundredQueriesTwentyThreeEscalations) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl");
    ASSERT_EQ(sim.pairs.size(), 100u);
    auto run = replay_simulation(sim.pairs, sim.cfg, sim.scorers);
    EXPECT_EQ(run.report.queries, 100u);
    EXPECT_EQ(run.report.escalations, 23u);
    EXPECT_DOUBLE_EQ(run.report.escalation_rate, 0.23);
    EXPECT_NEAR(run.report.mean_final, sim.expected["mean_final"].get<double>(), 1e-12);
    EXPECT_EQ(run.report.served_cloud, 23u);
    EXPECT_EQ(run.report.served_end, 77u);
    EXPECT_EQ(run.live, run.replay.metrics);

    // Queued examples are exactly the cleaned cloud answers for the low queries.
    const auto& labels = sim.expected["pseudo_labels"];
    ASSERT_EQ(run.queued.size(), 23u);
    ASSERT_EQ(labels.size(), 23u);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        EXPECT_EQ(run.queued[i].query, labels[i]["query"].get<std::string>());
        EXPECT_EQ(run.queued[i].output, labels[i]["output"].get<std::string>());
        EXPECT_EQ(run.queued[i].origin, ExampleOrigin::cloud_pseudo_label);
    }
}

TEST(Simulation, BruteForceRecountFromLog) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl");
    auto run = replay_simulation(sim.pairs, sim.cfg, sim.scorers);
    std::size_t escalated = 0, cloud = 0, received = 0;
    std::istringstream in(test::read_file(dir / "log.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
        auto j = json::parse(line);
        if (j["kind"] == "received") ++received;
        if (j["kind"] == "escalated") ++escalated;
        if (j["kind"] == "responded" && j["payload"]["served_by"] == "cloud") ++cloud;
    }
    EXPECT_EQ(received, 100u);
    EXPECT_EQ(escalated, 23u);
    EXPECT_EQ(cloud, 23u);
    EXPECT_EQ(run.report.escalations, escalated);
}

TEST(Simulation, BoundaryScoreIsAccepted) {
    // One scripted query lands exactly on tau = 0.5.
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl");
    auto run = replay_simulation(sim.pairs, sim.cfg, sim.scorers);
    std::size_t on_tau = 0;
    for (const auto& resp : run.responses) {
        if (resp.breakdown && resp.breakdown->final_score == 0.5) {
            ++on_tau;
            EXPECT_EQ(resp.served_by, ServedBy::end);
        }
    }
    EXPECT_EQ(on_tau, 1u);
}

TEST(Simulation, ReportsAreByteIdentical) {
    test::TempDir dir;
    auto a = test::load_sim100(dir / "a.jsonl");
    auto b = test::load_sim100(dir / "b.jsonl");
    auto ra = replay_simulation(a.pairs, a.cfg, a.scorers);
    auto rb = replay_simulation(b.pairs, b.cfg, b.scorers);
    EXPECT_EQ(ra.report.to_json().dump(), rb.report.to_json().dump());
    EXPECT_FALSE(ra.report.to_json().contains("wall_ms"));
}

TEST(Simulation, AllHighScoresNeverEscalate) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl");
    auto high = std::make_shared<FunctionScorer>("high", [](auto, auto) { return 0.9; });
    auto run = replay_simulation(sim.pairs, sim.cfg, ScorerPair{high, high});
    EXPECT_EQ(run.report.escalations, 0u);
    EXPECT_EQ(run.report.escalation_rate, 0.0);
    EXPECT_EQ(run.report.served_end, 100u);
    EXPECT_TRUE(run.queued.empty());
}

TEST(Simulation, RefusesNonEmptyLog) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl", 3);
    replay_simulation(sim.pairs, sim.cfg, sim.scorers);
    EXPECT_THROW(replay_simulation(sim.pairs, sim.cfg, sim.scorers), SimulationError);
}

TEST(Simulation, ReplayMissNamesTheQuery) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl", 3);
    SessionResponsePair extra;
    extra.context.push_back({Role::customer, "Where is my refund?", 0});
    extra.response = "x";
    extra.pair_id = "extra#0";
    sim.pairs.push_back(extra);
    try {
        replay_simulation(sim.pairs, sim.cfg, sim.scorers);
        FAIL();
    } catch (const SimulationError& e) {
        EXPECT_NE(std::string(e.what()).find("Where is my refund?"), std::string::npos);
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "log.jsonl") && std::filesystem::file_size(dir / "log.jsonl") > 0);
}

TEST(Simulation, NeedsReplayBackends) {
    test::TempDir dir;
    auto sim = test::load_sim100(dir / "log.jsonl", 3);
    sim.cfg.end_backend.kind = BackendKind::template_text;
    EXPECT_THROW(replay_simulation(sim.pairs, sim.cfg, sim.scorers), SimulationError);
}

TEST(Simulation, ScoreScriptErrors) {
    test::TempDir dir;
    test::write_file(dir / "dup.jsonl", R"({"query": "a", "sim": 0.1, "rel_end": 0.1, "rel_cloud": 0.1}
{"query": " a ", "sim": 0.1, "rel_end": 0.1, "rel_cloud": 0.1}
)");
    EXPECT_THROW(load_score_script(dir / "dup.jsonl"), SimulationError);
    test::write_file(dir / "range.jsonl", R"({"query": "a", "sim": 1.1, "rel_end": 0.1, "rel_cloud": 0.1})" "\n");
    EXPECT_THROW(load_score_script(dir / "range.jsonl"), SimulationError);
    test::write_file(dir / "missing.jsonl", R"({"query": "a", "sim": 0.5})" "\n");
    EXPECT_THROW(load_score_script(dir / "missing.jsonl"), SimulationError);

    ReplayBackend end("e", {{"a", "same"}, {"b", "same"}});
    ReplayBackend cloud("c", {{"a", "ref"}, {"b", "ref"}});
    ScoreScript ambiguous = {{"a", {0.1, 0.2, 0.3}}, {"b", {0.9, 0.2, 0.3}}};
    EXPECT_THROW(scripted_scorers(ambiguous, end, cloud), SimulationError);
    ScoreScript missing = {{"zzz", {0.1, 0.2, 0.3}}};
    EXPECT_THROW(scripted_scorers(missing, end, cloud), SimulationError);
}

TEST(Grid, PublishedTableWinners) {
    auto grid = load_grid(test::source_path("data/table5.tsv"));
    EXPECT_EQ(grid.columns, kTable5Columns);
    ASSERT_EQ(grid.rows.size(), 6u);
    auto winners = analyze_published_grid(grid);
    ASSERT_EQ(winners.size(), 6u);
    EXPECT_EQ(winners[0].input, "Hello");
    EXPECT_EQ(winners[0].winners, (Strings{"LoRA-3000", "LoRA-5000", "LoRA-15000"}));
    EXPECT_EQ(winners[0].score, 0.844);
    EXPECT_EQ(winners[1].winners, (Strings{"LoRA-15000"}));
    EXPECT_EQ(winners[1].score, 0.695);
    EXPECT_EQ(winners[2].input, "520401029636");
    EXPECT_EQ(winners[2].winners, (Strings{"Original"}));
    EXPECT_EQ(winners[2].score, 0.162);
    EXPECT_EQ(winners[3].winners, (Strings{"LoRA-3000"}));
    EXPECT_EQ(winners[3].score, 0.588);
    EXPECT_NE(winners[4].input.find("frustrating"), std::string::npos);
    EXPECT_EQ(winners[4].winners, (Strings{"LoRA-15000"}));
    EXPECT_EQ(winners[4].score, 0.697);
    EXPECT_EQ(winners[5].input, "Will you ship the order if I purchase it today?");
    EXPECT_EQ(winners[5].winners, (Strings{"LoRA-3000"}));
    EXPECT_EQ(winners[5].score, 0.777);
}

TEST(Grid, TsvRoundTrip) {
    auto grid = load_grid(test::source_path("data/table5.tsv"));
    EXPECT_EQ(grid.to_tsv(), test::read_file(test::source_path("data/table5.tsv")));
    auto again = parse_grid(grid.to_tsv());
    EXPECT_EQ(again.cells, grid.cells);
    auto j = grid.to_json();
    EXPECT_EQ(j["rows"][0]["row_maxima"].size(), 3u);
}

TEST(Grid, RowMaximaAreInvariantUnderMonotoneMaps) {
    auto grid = load_grid(test::source_path("data/table5.tsv"));
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> scale(0.1, 10.0), power(0.3, 4.0), shift(-5.0, 5.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const double a = scale(rng), p = power(rng), b = shift(rng);
        for (std::size_t r = 0; r < grid.rows.size(); ++r) {
            std::vector<double> mapped;
            for (double v : grid.cells[r]) mapped.push_back(a * std::pow(v, p) + b);
            ASSERT_EQ(row_maxima(grid.columns, mapped), grid.row_maxima[r]);
        }
    }
}

TEST(Grid, MalformedFiles) {
    EXPECT_THROW(parse_grid(""), std::runtime_error);
    EXPECT_THROW(parse_grid("input\n"), std::runtime_error);
    EXPECT_THROW(parse_grid("input\tA\n"), std::runtime_error);
    EXPECT_THROW(parse_grid("input\tA\tA\nq\t0.1\t0.2\n"), std::runtime_error);
    EXPECT_THROW(parse_grid("input\tA\tB\nq\t0.1\n"), std::runtime_error);
    EXPECT_THROW(parse_grid("input\tA\nq\t1.5\n"), std::runtime_error);
    EXPECT_THROW(parse_grid("input\tA\nq\tabc\n"), std::runtime_error);
    try {
        parse_grid("input\tA\nq\t0.1\nr\t0.2\t0.3\n", "g.tsv");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("g.tsv:3"), std::string::npos);
    }
    EXPECT_THROW(load_grid("/nonexistent/grid.tsv"), std::runtime_error);
}

TEST(Grid, ParsedCellsKeepThreeDecimals) {
    auto g = parse_grid("input\tA\tB\nq\t0.8441\t0.8444\n");
    EXPECT_EQ(g.cells[0], (std::vector<double>{0.844, 0.844}));
    EXPECT_EQ(g.row_maxima[0], (Strings{"A", "B"}));
}

TEST(Grid, EvalReproducesPublishedTableFromScriptedScores) {
    // Each variant answers with a distinct string; the similarity table maps
    // it to the published cell and rel_cloud stays under theta.
    auto published = load_grid(test::source_path("data/table5.tsv"));
    std::map<std::string, std::string> cloud_map;
    std::vector<std::map<std::string, std::string>> variant_maps(kTable5Columns.size());
    std::map<std::pair<std::string, std::string>, double> sim_table;
    for (std::size_t r = 0; r < published.rows.size(); ++r) {
        const std::string q = clean_text(published.rows[r]);
        const std::string ref = "cloud reply " + std::to_string(r);
        cloud_map[q] = ref;
        for (std::size_t c = 0; c < kTable5Columns.size(); ++c) {
            const std::string reply = kTable5Columns[c] + " reply " + std::to_string(r);
            variant_maps[c][q] = reply;
            sim_table[{reply, ref}] = published.cells[r][c];
        }
    }
    ReplayBackend cloud("gemini", cloud_map);
    std::vector<GridVariant> variants;
    for (std::size_t c = 0; c < kTable5Columns.size(); ++c) {
        variants.push_back({kTable5Columns[c], std::make_shared<ReplayBackend>(kTable5Columns[c], variant_maps[c])});
    }
    ScorerPair scorers{std::make_shared<TableScorer>(sim_table, nullptr),
                       std::make_shared<FunctionScorer>("rel", [](auto, auto) { return 0.1; })};
    auto grid = eval_grid(published.rows, variants, cloud, PromptTemplate{}, EvalConfig{}, GenerationParams{}, scorers);
    EXPECT_EQ(grid.rows.size() * grid.columns.size(), 36u);
    EXPECT_EQ(grid.cells, published.cells);
    EXPECT_EQ(grid.row_maxima, published.row_maxima);
}

TEST(Grid, SingleVariantAndTies) {
    ReplayBackend cloud("c", {{"q1", "ref1"}, {"q2", "ref2"}});
    auto a = std::make_shared<ReplayBackend>("a", std::map<std::string, std::string>{{"q1", "ref1"}, {"q2", "xx"}});
    auto b = std::make_shared<ReplayBackend>("b", std::map<std::string, std::string>{{"q1", "ref1"}, {"q2", "yy"}});
    auto s = std::make_shared<NgramCosineScorer>();
    ScorerPair scorers{s, s};
    auto single = eval_grid({"q1", "q2"}, {{"A", a}}, cloud, {}, EvalConfig{}, GenerationParams{}, scorers);
    EXPECT_EQ(single.row_maxima, (std::vector<Strings>{{"A"}, {"A"}}));
    auto both = eval_grid({"q1", "q2"}, {{"A", a}, {"B", b}}, cloud, {}, EvalConfig{}, GenerationParams{}, scorers);
    EXPECT_EQ(both.row_maxima[0], (Strings{"A", "B"}));
    EXPECT_EQ(both.row_maxima[1], (Strings{"A", "B"}));
    EXPECT_THROW(eval_grid({"missing"}, {{"A", a}}, cloud, {}, EvalConfig{}, GenerationParams{}, scorers), BackendError);
}
