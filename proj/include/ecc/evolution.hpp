#pragma once

#include "ecc/append_file.hpp"
#include "ecc/backends.hpp"
#include "ecc/config.hpp"
#include "ecc/promptkit.hpp"
#include "ecc/scoring.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ecc {

// Lifecycle of one live query:
//
//   received -> answered -> evaluated -> accepted
//                                     \-> escalated -> pseudo_labeled -> queued -> dispatched
//
// plus accepted -> escalated when a reviewer rejects an accepted answer.
enum class RecordState { received, answered, evaluated, accepted, escalated, pseudo_labeled, queued, dispatched };

enum class Verdict { satisfied, dissatisfied };

std::string to_string(RecordState state);
std::optional<RecordState> parse_record_state(std::string_view text);
std::string to_string(Verdict verdict);
std::optional<Verdict> parse_verdict(std::string_view text);

bool is_legal_transition(RecordState from, RecordState to);

class IllegalTransition : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct StateChange {
    RecordState state;
    std::int64_t ts;

    bool operator==(const StateChange&) const = default;
};

struct EvolutionRecord {
    std::string record_id;
    std::string session_id;
    std::string query;
    std::string end_output;
    std::optional<std::string> cloud_reference;
    std::optional<ScoreBreakdown> breakdown;
    std::optional<Verdict> human_verdict;
    std::optional<std::string> pseudo_label;
    std::optional<std::string> job_id;
    RecordState state = RecordState::received;
    std::vector<StateChange> history{{RecordState::received, 0}};
    std::vector<std::string> notes;

    /// Throws IllegalTransition for edges outside the lifecycle.
    void advance(RecordState to, std::int64_t ts);

    /// Only allowed once the record has been evaluated.
    void set_verdict(Verdict verdict);

    bool operator==(const EvolutionRecord&) const = default;
};

enum class ActionKind { accept, escalate };
enum class ActionReason { score_below_tau, human_dissatisfied, score_ok, human_satisfied_override };

std::string to_string(ActionKind kind);
std::string to_string(ActionReason reason);

struct Action {
    ActionKind kind = ActionKind::accept;
    ActionReason reason = ActionReason::score_ok;

    bool operator==(const Action&) const = default;
};

/// A human verdict wins in both directions; otherwise escalate iff final < tau.
Action decide_action(const ScoreBreakdown& breakdown, std::optional<Verdict> human_verdict, double tau);

/// Sends the query to the cloud model wrapped in the few-shot prompt.
GenerationResult escalate(std::string_view query, ModelBackend& cloud, const PromptTemplate& tmpl,
                          const GenerationParams& params);
GenerationResult escalate(std::string_view query, const BackendConfig& cloud, const PromptTemplate& tmpl,
                          const GenerationParams& params);

enum class ExampleOrigin { cloud_pseudo_label, corpus };

std::string to_string(ExampleOrigin origin);

struct TrainingExample {
    std::string query;
    std::string output;
    ExampleOrigin origin = ExampleOrigin::cloud_pseudo_label;
    std::optional<std::string> source_record;
    std::int64_t created_at = 0;

    bool operator==(const TrainingExample&) const = default;
};

/// Export line: {"query", "output", "origin", "source_record"}.
std::string example_to_export_line(const TrainingExample& example);
TrainingExample example_from_json(const nlohmann::json& j);

/// Turns the cloud answer into a training example and moves the record to
/// pseudo_labeled. Returns nullopt (and annotates the record) when the cleaned
/// cloud text is empty. Throws IllegalTransition unless the record is escalated.
std::optional<TrainingExample> make_pseudo_label(EvolutionRecord& record, std::string_view cloud_text,
                                                 std::int64_t ts);

class TrainerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Receives a batch file in export format and returns a job identifier.
class Trainer {
public:
    virtual ~Trainer() = default;
    virtual std::string submit(const TrainingJobSpec& spec, const std::filesystem::path& batch_file) = 0;
};

/// Appends each batch to a training-set file, skipping (query, output) pairs
/// already present.
class FileSinkTrainer : public Trainer {
public:
    explicit FileSinkTrainer(std::filesystem::path output);
    std::string submit(const TrainingJobSpec& spec, const std::filesystem::path& batch_file) override;

    const std::filesystem::path& output() const { return output_; }

private:
    std::filesystem::path output_;
    std::unordered_set<std::uint64_t> seen_;
    std::size_t jobs_ = 0;
};

class NoopTrainer : public Trainer {
public:
    std::string submit(const TrainingJobSpec& spec, const std::filesystem::path& batch_file) override;

    std::size_t batches() const { return batches_; }
    std::size_t examples() const { return examples_; }

private:
    std::size_t batches_ = 0;
    std::size_t examples_ = 0;
};

std::unique_ptr<Trainer> make_trainer(const EccConfig& cfg);

/// Hash used to deduplicate exported examples.
std::uint64_t example_key(std::string_view query, std::string_view output);

struct DrainResult {
    std::vector<TrainingExample> batch;
    std::string job_id;

    std::size_t dispatched() const { return batch.size(); }
};

/// FIFO of pending training examples.
///
/// With a journal path every enqueue is on disk before enqueue() returns and
/// a restarted queue picks up exactly the undispatched examples. Delivery is
/// at-least-once: a crash between a trainer accepting a batch and the
/// acknowledgement being journaled re-delivers that batch.
class TrainingQueue {
public:
    explicit TrainingQueue(std::optional<std::filesystem::path> journal = std::nullopt);

    std::size_t enqueue(const TrainingExample& example);
    std::size_t depth() const;

    /// Hands up to batch_size oldest examples to the trainer. On trainer
    /// failure the batch stays at the head and TrainerError propagates.
    DrainResult drain(std::size_t batch_size, Trainer& trainer, const TrainingJobSpec& spec);

    std::vector<TrainingExample> pending() const;

private:
    void load();

    std::optional<std::filesystem::path> journal_path_;
    std::unique_ptr<AppendFile> journal_;
    mutable std::mutex mu_;
    std::deque<TrainingExample> items_;
    std::size_t drains_ = 0;
};

}  // namespace ecc
