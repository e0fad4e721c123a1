#pragma once

#include "ecc/backends.hpp"
#include "ecc/config.hpp"
#include "ecc/corpus.hpp"
#include "ecc/event_log.hpp"
#include "ecc/gateway.hpp"
#include "ecc/scoring.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecc {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScriptedScore {
    double sim = 0.0;
    double rel_end = 0.0;
    double rel_cloud = 0.0;
};

/// Scores pinned per (cleaned) query.
using ScoreScript = std::map<std::string, ScriptedScore>;

/// One `{"query", "sim", "rel_end", "rel_cloud"}` object per line.
ScoreScript load_score_script(const std::filesystem::path& path);

struct ScorerPair {
    std::shared_ptr<const TextScorer> similarity;
    std::shared_ptr<const TextScorer> relevance;
};

/// Table scorers that return the scripted values for each query's replay
/// answers and defer to the bigram cosine for anything else. Throws
/// SimulationError when two queries would need different values for the same
/// pair of strings, or a scripted query is missing from a fixture.
ScorerPair scripted_scorers(const ScoreScript& script, const ReplayBackend& end, const ReplayBackend& cloud);

struct SimulationReport {
    std::uint64_t queries = 0;
    std::uint64_t escalations = 0;
    double escalation_rate = 0.0;
    double mean_final = 0.0;
    std::uint64_t served_end = 0;
    std::uint64_t served_cloud = 0;
    std::uint64_t queue_depth = 0;
    std::int64_t wall_ms = 0;

    static SimulationReport from_metrics(const Metrics& m);

    /// wall_ms is left out so identical runs serialize identically.
    nlohmann::json to_json() const;
    std::string to_table() const;
};

struct SimulationRun {
    SimulationReport report;
    Metrics live;
    ReplayResult replay;
    std::vector<ChatResponse> responses;
    std::vector<TrainingExample> queued;
};

/// Feeds every pair's final customer turn through a fresh gateway built from
/// cfg (replay backends only, logical clock) and reports from the event log it
/// wrote to cfg.log_path, which must not already hold events. Scorers default
/// to the configured ones.
SimulationRun replay_simulation(const std::vector<SessionResponsePair>& pairs, const EccConfig& cfg,
                                std::optional<ScorerPair> scorers = std::nullopt);

struct GridReport {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    /// cells[r][c], rounded to 3 decimals.
    std::vector<std::vector<double>> cells;
    /// Column labels holding the row maximum, in column order.
    std::vector<std::vector<std::string>> row_maxima;

    nlohmann::json to_json() const;
    std::string to_tsv() const;
};

/// Labels of the columns whose cell equals the row maximum exactly.
std::vector<std::string> row_maxima(const std::vector<std::string>& columns, const std::vector<double>& row);

/// Grid file: a tab-separated header `input<TAB>label...` followed by one line
/// per input with its scores. Throws std::runtime_error naming the line on a
/// malformed file or a score outside [0,1].
GridReport load_grid(const std::filesystem::path& path);
GridReport parse_grid(std::string_view text, const std::string& source = "grid");

struct GridVariant {
    std::string label;
    std::shared_ptr<ModelBackend> backend;
};

/// cell(r, c) = final score of variant c's reply to input r against the cloud
/// reply (bare utterances, no dialogue history).
GridReport eval_grid(const std::vector<std::string>& inputs, const std::vector<GridVariant>& variants,
                     ModelBackend& cloud, const PromptTemplate& prompt, const EvalConfig& eval,
                     const GenerationParams& generation, const ScorerPair& scorers);

struct RowWinners {
    std::string input;
    std::vector<std::string> winners;
    double score = 0.0;
};

std::vector<RowWinners> analyze_published_grid(const GridReport& grid);

}  // namespace ecc
