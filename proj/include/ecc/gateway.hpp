#pragma once

#include "ecc/backends.hpp"
#include "ecc/config.hpp"
#include "ecc/event_log.hpp"
#include "ecc/evolution.hpp"
#include "ecc/promptkit.hpp"
#include "ecc/scoring.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace ecc {

struct ChatRequest {
    std::string session_id;
    std::string message;
};

enum class ServedBy { end, cloud };

std::string to_string(ServedBy served_by);

struct ChatResponse {
    std::string record_id;
    std::string reply;
    ServedBy served_by = ServedBy::end;
    std::optional<ScoreBreakdown> breakdown;
    std::int64_t latency_ms = 0;
};

/// Carries the HTTP status the API layer should answer with.
class GatewayError : public std::runtime_error {
public:
    GatewayError(int status, const std::string& message, std::string record_id = {})
        : std::runtime_error(message), status_(status), record_id_(std::move(record_id)) {}
    int status() const noexcept { return status_; }
    const std::string& record_id() const noexcept { return record_id_; }

private:
    int status_;
    std::string record_id_;
};

struct GatewayDeps {
    std::shared_ptr<ModelBackend> end;
    std::shared_ptr<ModelBackend> cloud;
    std::shared_ptr<const TextScorer> similarity;
    std::shared_ptr<const TextScorer> relevance;
    std::shared_ptr<Trainer> trainer;
    Clock clock = steady_clock_ms();
    PromptTemplate prompt;
};

/// Backends, scorers, trainer and few-shot prompt as configured. The prompt is
/// sampled from cfg.prompt_pairs (min(n, available) examples) when set.
GatewayDeps make_gateway_deps(const EccConfig& cfg, BackendOptions options = {});

struct ReviewPage {
    std::vector<EvolutionRecord> items;
    std::size_t total = 0;
    std::size_t offset = 0;
    std::size_t limit = 0;
};

/// The serving loop over an event-sourced store. Opening a gateway on an
/// existing log restores its records and metrics.
class Gateway {
public:
    Gateway(EccConfig cfg, GatewayDeps deps);
    ~Gateway();

    ChatResponse handle_chat(const ChatRequest& request);

    /// Stores a human verdict on an evaluated or accepted record. A
    /// dissatisfied verdict sends the record down the escalation path.
    EvolutionRecord handle_feedback(const std::string& record_id, Verdict verdict);

    /// Accepted records still waiting for a human verdict, oldest first.
    ReviewPage review_queue(std::size_t offset, std::size_t limit) const;

    std::optional<EvolutionRecord> record(const std::string& record_id) const;
    Metrics metrics() const;

    /// Drains up to batch_size queued examples to the trainer.
    DrainResult flush(std::size_t batch_size);
    std::size_t queue_depth() const;
    std::vector<TrainingExample> pending() const;

    const EccConfig& config() const { return cfg_; }
    const std::filesystem::path& log_path() const { return log_.path(); }

private:
    struct Slot;

    std::shared_ptr<Slot> find(const std::string& record_id) const;
    void emit(Slot& slot, EventKind kind, nlohmann::json payload);
    /// Pseudo-labels an escalated record from its cloud reference and queues it.
    void escalation_path(Slot& slot);
    bool sampled(std::uint64_t counter) const;
    void maybe_auto_flush();

    EccConfig cfg_;
    GatewayDeps deps_;
    EventLog log_;
    TrainingQueue queue_;
    mutable std::mutex records_mu_;
    std::map<std::string, std::shared_ptr<Slot>> records_;
    std::atomic<std::uint64_t> counter_{0};
    std::mutex flush_mu_;
};

nlohmann::json record_to_json(const EvolutionRecord& record, std::optional<int> decimals = 3);
nlohmann::json response_to_json(const ChatResponse& response, std::optional<int> decimals = 3);

/// HTTP API over a Gateway:
///   POST /v1/chat, POST /v1/feedback, GET /v1/review/queue,
///   POST /v1/review/{id}, GET /v1/metrics, GET /v1/records/{id}.
/// Scores are rounded to 3 decimals. With cfg.auth_token_env set, the named
/// variable must hold a token and every request must carry
/// `Authorization: Bearer <token>`.
class GatewayServer {
public:
    explicit GatewayServer(Gateway& gateway);
    ~GatewayServer();

    /// Binds host:port (port 0 picks one) and returns the bound port, or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool serve();
    void stop();

private:
    Gateway& gateway_;
    std::unique_ptr<httplib::Server> server_;
    std::string token_;
};

}  // namespace ecc
