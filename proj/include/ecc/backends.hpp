#pragma once

#include "ecc/config.hpp"
#include "ecc/promptkit.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecc {

struct GenerationResult {
    std::string text;
    std::int64_t latency_ms = 0;
    std::size_t input_chars = 0;
    std::size_t output_chars = 0;
    std::string backend_id;
};

enum class BackendErrorKind { invalid_request, replay_miss, http_failure, timeout, malformed_response, config };

std::string to_string(BackendErrorKind kind);

class BackendError : public std::runtime_error {
public:
    BackendError(BackendErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    BackendErrorKind kind() const noexcept { return kind_; }

private:
    BackendErrorKind kind_;
};

/// A chat model. generate() may be called from several threads at once.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;

    /// `messages` must be nonempty and end with a user message.
    virtual GenerationResult generate(const std::vector<ChatMessage>& messages, const GenerationParams& params) = 0;

    virtual const std::string& id() const = 0;
};

/// Monotonic millisecond clock; injectable so simulations stay deterministic.
using Clock = std::function<std::int64_t()>;
Clock steady_clock_ms();

struct BackendOptions {
    Clock clock = steady_clock_ms();
    /// Called between HTTP retries.
    std::function<void(std::chrono::milliseconds)> sleep;
};

/// Fixture-backed backend keyed by clean_text of the last user message. Never
/// touches the network.
class ReplayBackend : public ModelBackend {
public:
    ReplayBackend(std::string model_name, std::map<std::string, std::string> responses, Clock clock = steady_clock_ms());

    /// Fixture: one `{"query": ..., "response": ...}` object per line.
    static std::shared_ptr<ReplayBackend> from_file(const std::filesystem::path& path, std::string model_name,
                                                    Clock clock = steady_clock_ms());

    GenerationResult generate(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
    const std::string& id() const override { return id_; }

    bool contains(std::string_view query) const;
    std::optional<std::string> response_for(std::string_view query) const;
    std::size_t size() const { return responses_.size(); }
    /// Number of generate() calls answered so far.
    std::size_t calls() const;

private:
    std::string id_;
    std::map<std::string, std::string> responses_;
    Clock clock_;
    std::atomic<std::size_t> calls_{0};
};

/// Constant reply; `{query}` in the text is replaced by the cleaned user message.
class TemplateBackend : public ModelBackend {
public:
    TemplateBackend(std::string model_name, std::string text);
    GenerationResult generate(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
    const std::string& id() const override { return id_; }

private:
    std::string id_;
    std::string text_;
};

/// Chat-completions client: POSTs {model, messages, temperature, top_p,
/// max_tokens} and reads choices[0].message.content. Transport errors, 408,
/// 429 and 5xx are retried up to max_retries times with 250 ms * 2^k backoff.
class HttpChatBackend : public ModelBackend {
public:
    HttpChatBackend(BackendConfig config, BackendOptions options = {});
    GenerationResult generate(const std::vector<ChatMessage>& messages, const GenerationParams& params) override;
    const std::string& id() const override { return id_; }

    static constexpr std::chrono::milliseconds kBackoffBase{250};

private:
    BackendConfig config_;
    BackendOptions options_;
    std::string id_;
    std::string origin_;
    std::string path_;
};

/// Request body for the chat-completions wire protocol.
std::string chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                              const GenerationParams& params);

std::shared_ptr<ModelBackend> make_backend(const BackendConfig& config, BackendOptions options = {});

/// One-shot convenience over make_backend.
GenerationResult generate(const BackendConfig& config, const std::vector<ChatMessage>& messages,
                          const GenerationParams& params);

}  // namespace ecc
