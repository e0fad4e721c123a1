#pragma once

#include "ecc/append_file.hpp"
#include "ecc/evolution.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecc {

enum class EventKind {
    received,
    answered,
    end_failed,
    evaluated,
    evaluation_unavailable,
    accepted,
    escalated,
    escalation_failed,
    pseudo_labeled,
    pseudo_label_skipped,
    queued,
    dispatched,
    responded,
    feedback,
};

std::string to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// One line of the append-only log. Payload shapes per kind:
///   received {session_id, query} · answered {end_output, latency_ms}
///   end_failed {error} · evaluated {cloud_reference, breakdown}
///   evaluation_unavailable {error} · accepted/escalated {reason}
///   escalation_failed {error} · pseudo_labeled {output}
///   pseudo_label_skipped {note} · queued {} · dispatched {job_id}
///   responded {served_by, reply, latency_ms} · feedback {verdict}
struct Event {
    std::uint64_t seq = 0;
    std::int64_t ts = 0;
    EventKind kind = EventKind::received;
    std::string record_id;
    nlohmann::json payload = nlohmann::json::object();

    std::string to_line() const;
    static Event from_line(std::string_view line);
};

/// Aggregates derived from the log. Live gateways and log replay fold the
/// same events through MetricsFold, so the two must agree exactly.
struct Metrics {
    std::uint64_t queries = 0;
    std::uint64_t evaluated = 0;
    std::uint64_t accepted = 0;
    std::uint64_t escalations = 0;
    std::uint64_t served_end = 0;
    std::uint64_t served_cloud = 0;
    std::uint64_t end_failures = 0;
    std::uint64_t evaluation_unavailable = 0;
    std::uint64_t escalation_failures = 0;
    std::uint64_t pseudo_labels = 0;
    std::uint64_t feedback = 0;
    std::uint64_t queued = 0;
    std::uint64_t dispatched = 0;
    double final_sum = 0.0;

    double escalation_rate() const { return queries ? static_cast<double>(escalations) / static_cast<double>(queries) : 0.0; }
    double mean_final() const { return evaluated ? final_sum / static_cast<double>(evaluated) : 0.0; }
    std::uint64_t queue_depth() const { return queued - dispatched; }

    void apply(const Event& event);

    nlohmann::json to_json() const;

    bool operator==(const Metrics&) const = default;
};

nlohmann::json breakdown_to_json(const ScoreBreakdown& b, std::optional<int> decimals = std::nullopt);
ScoreBreakdown breakdown_from_json(const nlohmann::json& j);

/// A fresh record from its `received` event.
EvolutionRecord record_from_received(const Event& event);

/// Applies one non-`received` event to its record. Throws IllegalTransition
/// when the event does not fit the record's lifecycle.
void apply_event(EvolutionRecord& record, const Event& event);

/// Rebuilds EvolutionRecords from events.
class RecordFold {
public:
    void apply(const Event& event);
    const std::map<std::string, EvolutionRecord>& records() const { return records_; }
    std::map<std::string, EvolutionRecord> take() { return std::move(records_); }

private:
    std::map<std::string, EvolutionRecord> records_;
};

class EventLogError : public std::runtime_error {
public:
    EventLogError(const std::string& message, std::size_t line) : std::runtime_error(message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ReplayResult {
    Metrics metrics;
    std::map<std::string, EvolutionRecord> records;
    std::uint64_t last_seq = 0;
    std::vector<Event> events;

    std::uint64_t queue_depth() const { return metrics.queue_depth(); }
};

/// Pure function of the log file. Throws EventLogError on a corrupt or
/// truncated line or a gap in the sequence numbers. A missing file is an
/// empty log.
ReplayResult replay_events(const std::filesystem::path& path);

/// Single serialized appender. Sequence numbers continue from an existing
/// file; every append is durable before it returns.
class EventLog {
public:
    /// Opens (creating if needed) and replays `path`.
    explicit EventLog(const std::filesystem::path& path);

    /// Appends and returns the stored event.
    Event append(EventKind kind, const std::string& record_id, nlohmann::json payload, std::int64_t ts);

    Metrics metrics() const;
    std::uint64_t last_seq() const;
    const std::filesystem::path& path() const { return file_.path(); }

    /// Records recovered when the log was opened.
    std::map<std::string, EvolutionRecord> take_recovered_records() { return std::move(recovered_); }
    std::uint64_t recovered_queries() const { return recovered_queries_; }

private:
    AppendFile file_;
    mutable std::mutex mu_;
    std::uint64_t seq_ = 0;
    Metrics metrics_;
    std::map<std::string, EvolutionRecord> recovered_;
    std::uint64_t recovered_queries_ = 0;
};

}  // namespace ecc
