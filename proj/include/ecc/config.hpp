#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecc {

/// Automated-evaluation knobs: composite mixing weight, cloud-relevance
/// fallback threshold, escalation threshold and live sampling rate.
struct EvalConfig {
    double alpha = 0.8;
    double theta = 0.2;
    double tau = 0.5;
    double eval_sampling_rate = 1.0;

    bool operator==(const EvalConfig&) const = default;
};

struct GenerationParams {
    int max_length = 8192;
    double top_p = 0.8;
    double temperature = 0.6;
    int max_input_length = 256;
    int max_output_length = 512;

    bool operator==(const GenerationParams&) const = default;
};

enum class TuningMethod { prefix_tuning, p_tuning_v2, lora, none };

std::string to_string(TuningMethod method);
std::optional<TuningMethod> parse_tuning_method(std::string_view text);

/// Fine-tuning job description handed to trainers. Method-specific fields are
/// present only for the methods that use them.
struct TrainingJobSpec {
    static constexpr int kDefaultSteps = 30000;
    static constexpr double kDefaultLearningRate = 5e-5;
    static constexpr int kDefaultBatchSize = 1;
    static constexpr int kDefaultVirtualTokens = 128;
    static constexpr int kDefaultLoraRank = 8;
    static constexpr int kDefaultLoraAlpha = 32;
    static constexpr double kDefaultLoraDropout = 0.1;

    TuningMethod method = TuningMethod::lora;
    int fine_tuning_steps = kDefaultSteps;
    double learning_rate = kDefaultLearningRate;
    int per_device_batch_size = kDefaultBatchSize;
    std::optional<int> num_virtual_tokens;
    std::optional<int> lora_rank = kDefaultLoraRank;
    std::optional<int> lora_alpha = kDefaultLoraAlpha;
    std::optional<double> lora_dropout = kDefaultLoraDropout;

    /// Defaults for `method` with exactly its own specific fields populated.
    static TrainingJobSpec defaults_for(TuningMethod method);

    bool operator==(const TrainingJobSpec&) const = default;
};

enum class BackendKind { http_chat, replay, template_text };

std::string to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view text);

/// Where a model lives. `endpoint` is used by http_chat only, `fixture_path`
/// by replay only, `template_text` by template only. API keys are referenced
/// by environment-variable name and never stored.
struct BackendConfig {
    BackendKind kind = BackendKind::template_text;
    std::optional<std::string> endpoint;
    std::string model_name;
    std::string api_key_env;
    int timeout_ms = 30000;
    int max_retries = 2;
    std::optional<std::string> fixture_path;
    std::optional<std::string> template_text;

    bool operator==(const BackendConfig&) const = default;
};

enum class EscalationMode { synchronous, asynchronous };

enum class TrainerKind { file_sink, noop };

struct EccConfig {
    EvalConfig eval;
    GenerationParams generation;
    TrainingJobSpec training;
    BackendConfig end_backend;
    BackendConfig cloud_backend;
    std::int64_t prompt_n = 500;
    std::optional<std::string> prompt_preamble;
    /// Pair export file the few-shot examples are sampled from.
    std::string prompt_pairs;
    std::int64_t queue_batch_size = 64;
    bool queue_auto_flush = false;
    /// Durable queue journal; empty keeps the queue in memory only.
    std::string queue_path = "ecc-queue.jsonl";
    std::string log_path = "ecc-events.jsonl";
    std::string similarity_scorer = "ngram-cosine";
    std::string relevance_scorer = "ngram-cosine";
    EscalationMode escalation_mode = EscalationMode::synchronous;
    TrainerKind trainer = TrainerKind::file_sink;
    std::string trainer_output = "ecc-training.jsonl";
    std::string cors_origin = "*";
    std::string auth_token_env;
    std::uint64_t seed = 0;

    EccConfig();

    bool operator==(const EccConfig&) const = default;
};

struct ConfigViolation {
    std::string field;
    std::string value;
    std::string constraint;

    bool operator==(const ConfigViolation&) const = default;
};

/// Raised by load_config/parse_config. `line()` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, std::size_t line = 0, std::string key = {})
        : std::runtime_error(message), line_(line), key_(std::move(key)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

/// Parses the flat `section.key = value` format. Unset keys keep defaults.
/// Throws ConfigError on syntax errors, unknown keys and invariant violations.
EccConfig parse_config(std::string_view text);

/// parse_config over a file; relative paths inside are resolved against the
/// file's directory.
EccConfig load_config(const std::filesystem::path& path);

/// Explicit path, else $ECC_CONFIG, else nothing (use defaults).
std::optional<std::filesystem::path> resolve_config_path(const std::optional<std::filesystem::path>& explicit_path);

std::vector<ConfigViolation> validate_config(const EccConfig& cfg);

/// Emits every field; parse_config(serialize_config(c)) == c.
std::string serialize_config(const EccConfig& cfg);

}  // namespace ecc
