#pragma once

#include "ecc/config.hpp"
#include "ecc/corpus.hpp"
#include "ecc/simharness.hpp"

#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace ecc::test {

/// The shipped 100-query replay fixture with its scripted scores.
struct Sim100 {
    EccConfig cfg;
    std::vector<SessionResponsePair> pairs;
    ScorerPair scorers;
    nlohmann::json expected;
};

inline Sim100 load_sim100(const std::filesystem::path& log_path, std::size_t limit = SIZE_MAX) {
    const auto dir = source_path("data/sim100");
    Sim100 s;
    s.cfg = load_config(dir / "sim.conf");
    s.cfg.log_path = log_path.string();
    s.pairs = read_pairs(dir / "pairs.jsonl");
    if (s.pairs.size() > limit) s.pairs.resize(limit);
    auto end = ReplayBackend::from_file(*s.cfg.end_backend.fixture_path, "end");
    auto cloud = ReplayBackend::from_file(*s.cfg.cloud_backend.fixture_path, "cloud");
    s.scorers = scripted_scorers(load_score_script(dir / "scores.jsonl"), *end, *cloud);
    s.expected = nlohmann::json::parse(read_file(dir / "expected.json"));
    return s;
}

}  // namespace ecc::test
