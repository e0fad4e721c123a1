#include "ecc/backends.hpp"

#include "ecc/text.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <thread>

namespace ecc {

using nlohmann::json;

std::string to_string(BackendErrorKind kind) {
    switch (kind) {
        case BackendErrorKind::invalid_request: return "invalid_request";
        case BackendErrorKind::replay_miss: return "replay_miss";
        case BackendErrorKind::http_failure: return "http_failure";
        case BackendErrorKind::timeout: return "timeout";
        case BackendErrorKind::malformed_response: return "malformed_response";
        case BackendErrorKind::config: return "config";
    }
    return "unknown";
}

Clock steady_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

namespace {

const ChatMessage& last_user_message(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) throw BackendError(BackendErrorKind::invalid_request, "message list is empty");
    if (messages.back().role != "user") {
        throw BackendError(BackendErrorKind::invalid_request, "last message must have role 'user'");
    }
    return messages.back();
}

std::size_t input_chars(const std::vector<ChatMessage>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) n += utf8_length(m.content);
    return n;
}

}  // namespace

ReplayBackend::ReplayBackend(std::string model_name, std::map<std::string, std::string> responses, Clock clock)
    : id_("replay:" + model_name), clock_(std::move(clock)) {
    for (auto& [query, response] : responses) responses_[clean_text(query)] = std::move(response);
}

std::shared_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path, std::string model_name,
                                                        Clock clock) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BackendError(BackendErrorKind::config, "cannot read replay fixture: " + path.string());
    std::map<std::string, std::string> responses;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("query") || !j.contains("response") ||
            !j["query"].is_string() || !j["response"].is_string()) {
            throw BackendError(BackendErrorKind::config,
                               path.string() + ":" + std::to_string(lineno) + ": expected {\"query\", \"response\"}");
        }
        std::string key = clean_text(j["query"].get<std::string>());
        std::string value = j["response"].get<std::string>();
        if (auto it = responses.find(key); it != responses.end() && it->second != value) {
            throw BackendError(BackendErrorKind::config,
                               path.string() + ":" + std::to_string(lineno) + ": conflicting response for '" + key + "'");
        }
        responses[std::move(key)] = std::move(value);
    }
    return std::make_shared<ReplayBackend>(std::move(model_name), std::move(responses), std::move(clock));
}

GenerationResult ReplayBackend::generate(const std::vector<ChatMessage>& messages, const GenerationParams&) {
    const auto start = clock_();
    const std::string key = clean_text(last_user_message(messages).content);
    auto it = responses_.find(key);
    if (it == responses_.end()) {
        throw BackendError(BackendErrorKind::replay_miss, id_ + ": no fixture response for '" + key + "'");
    }
    calls_.fetch_add(1, std::memory_order_relaxed);
    GenerationResult r;
    r.text = it->second;
    r.input_chars = input_chars(messages);
    r.output_chars = utf8_length(r.text);
    r.backend_id = id_;
    r.latency_ms = std::max<std::int64_t>(0, clock_() - start);
    return r;
}

bool ReplayBackend::contains(std::string_view query) const { return responses_.count(clean_text(query)) > 0; }

std::optional<std::string> ReplayBackend::response_for(std::string_view query) const {
    auto it = responses_.find(clean_text(query));
    if (it == responses_.end()) return std::nullopt;
    return it->second;
}

std::size_t ReplayBackend::calls() const { return calls_.load(std::memory_order_relaxed); }

TemplateBackend::TemplateBackend(std::string model_name, std::string text)
    : id_("template:" + model_name), text_(std::move(text)) {}

GenerationResult TemplateBackend::generate(const std::vector<ChatMessage>& messages, const GenerationParams&) {
    const std::string query = clean_text(last_user_message(messages).content);
    std::string out;
    std::string_view rest = text_;
    constexpr std::string_view kSlot = "{query}";
    for (auto pos = rest.find(kSlot); pos != std::string_view::npos; pos = rest.find(kSlot)) {
        out.append(rest.substr(0, pos));
        out.append(query);
        rest.remove_prefix(pos + kSlot.size());
    }
    out.append(rest);
    GenerationResult r;
    r.text = std::move(out);
    r.input_chars = input_chars(messages);
    r.output_chars = utf8_length(r.text);
    r.backend_id = id_;
    return r;
}

std::string chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                              const GenerationParams& params) {
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body = {{"model", model},
                 {"messages", msgs},
                 {"temperature", params.temperature},
                 {"top_p", params.top_p},
                 {"max_tokens", params.max_output_length}};
    return body.dump();
}

HttpChatBackend::HttpChatBackend(BackendConfig config, BackendOptions options)
    : config_(std::move(config)), options_(std::move(options)), id_("http_chat:" + config_.model_name) {
    if (!config_.endpoint) throw BackendError(BackendErrorKind::config, "http_chat backend needs an endpoint");
    const std::string& url = *config_.endpoint;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw BackendError(BackendErrorKind::config, "bad endpoint URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (!options_.sleep) options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

GenerationResult HttpChatBackend::generate(const std::vector<ChatMessage>& messages, const GenerationParams& params) {
    last_user_message(messages);
    const std::string body = chat_request_body(config_.model_name, messages, params);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    // Connect and read each get half of the per-attempt budget.
    const auto half = std::chrono::milliseconds(std::max(1, config_.timeout_ms / 2));
    httplib::Client client(origin_);
    client.set_connection_timeout(half);
    client.set_read_timeout(half);
    client.set_write_timeout(half);

    const auto start = options_.clock();
    std::string last_error;
    BackendErrorKind last_kind = BackendErrorKind::http_failure;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) options_.sleep(kBackoffBase * (1LL << (attempt - 1)));
        const auto attempt_start = options_.clock();
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   (err == httplib::Error::Read && options_.clock() - attempt_start >= half.count());
            last_kind = timed_out ? BackendErrorKind::timeout : BackendErrorKind::http_failure;
            last_error = httplib::to_string(err);
            continue;
        }
        const int status = res->status;
        if (status == 408 || status == 429 || status >= 500) {
            last_kind = BackendErrorKind::http_failure;
            last_error = "HTTP " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw BackendError(BackendErrorKind::http_failure,
                               id_ + ": HTTP " + std::to_string(status) + " from " + *config_.endpoint);
        }
        json reply = json::parse(res->body, nullptr, false);
        const json* content = nullptr;
        if (!reply.is_discarded() && reply.is_object() && reply.contains("choices") && reply["choices"].is_array() &&
            !reply["choices"].empty()) {
            const json& first = reply["choices"][0];
            if (first.is_object() && first.contains("message") && first["message"].is_object() &&
                first["message"].contains("content") && first["message"]["content"].is_string()) {
                content = &first["message"]["content"];
            }
        }
        if (content == nullptr) {
            throw BackendError(BackendErrorKind::malformed_response,
                               id_ + ": response lacks choices[0].message.content");
        }
        GenerationResult r;
        r.text = content->get<std::string>();
        r.input_chars = input_chars(messages);
        r.output_chars = utf8_length(r.text);
        r.backend_id = id_;
        r.latency_ms = std::max<std::int64_t>(0, options_.clock() - start);
        return r;
    }
    throw BackendError(last_kind, id_ + ": " + last_error + " after " + std::to_string(config_.max_retries + 1) +
                                      " attempt(s) to " + *config_.endpoint);
}

std::shared_ptr<ModelBackend> make_backend(const BackendConfig& config, BackendOptions options) {
    switch (config.kind) {
        case BackendKind::http_chat: return std::make_shared<HttpChatBackend>(config, std::move(options));
        case BackendKind::replay:
            if (!config.fixture_path) throw BackendError(BackendErrorKind::config, "replay backend needs a fixture");
            return ReplayBackend::from_file(*config.fixture_path, config.model_name, std::move(options.clock));
        case BackendKind::template_text:
            return std::make_shared<TemplateBackend>(config.model_name, config.template_text.value_or(""));
    }
    throw BackendError(BackendErrorKind::config, "unknown backend kind");
}

GenerationResult generate(const BackendConfig& config, const std::vector<ChatMessage>& messages,
                          const GenerationParams& params) {
    return make_backend(config)->generate(messages, params);
}

}  // namespace ecc
