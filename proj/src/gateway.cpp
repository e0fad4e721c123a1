#include "ecc/gateway.hpp"

#include "ecc/corpus.hpp"
#include "ecc/random.hpp"
#include "ecc/text.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace ecc {

using nlohmann::json;

struct Gateway::Slot {
    std::mutex mu;
    EvolutionRecord record;
};

std::string to_string(ServedBy served_by) { return served_by == ServedBy::cloud ? "cloud" : "end"; }

GatewayDeps make_gateway_deps(const EccConfig& cfg, BackendOptions options) {
    GatewayDeps deps;
    deps.clock = options.clock;
    deps.end = make_backend(cfg.end_backend, options);
    deps.cloud = make_backend(cfg.cloud_backend, options);
    const auto registry = ScorerRegistry::with_builtins();
    deps.similarity = registry.create(cfg.similarity_scorer);
    deps.relevance = registry.create(cfg.relevance_scorer);
    deps.trainer = make_trainer(cfg);
    const std::string preamble = cfg.prompt_preamble.value_or(kDefaultPreamble);
    if (!cfg.prompt_pairs.empty()) {
        const auto pairs = read_pairs(cfg.prompt_pairs);
        const auto n = std::min<std::size_t>(pairs.size(), static_cast<std::size_t>(cfg.prompt_n));
        deps.prompt = build_fewshot_prompt(pairs, n, cfg.seed, preamble);
    } else {
        deps.prompt.preamble = preamble;
    }
    return deps;
}

namespace {

std::optional<std::filesystem::path> queue_journal(const EccConfig& cfg) {
    if (cfg.queue_path.empty()) return std::nullopt;
    return std::filesystem::path(cfg.queue_path);
}

std::string format_record_id(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r-%06llu", static_cast<unsigned long long>(n));
    return buf;
}

}  // namespace

Gateway::Gateway(EccConfig cfg, GatewayDeps deps)
    : cfg_(std::move(cfg)), deps_(std::move(deps)), log_(cfg_.log_path), queue_(queue_journal(cfg_)) {
    if (!deps_.end || !deps_.cloud || !deps_.similarity || !deps_.relevance || !deps_.trainer || !deps_.clock) {
        throw std::invalid_argument("gateway dependencies incomplete");
    }
    for (auto& [id, rec] : log_.take_recovered_records()) {
        auto slot = std::make_shared<Slot>();
        slot->record = std::move(rec);
        records_.emplace(id, std::move(slot));
    }
    counter_ = log_.recovered_queries();
}

Gateway::~Gateway() = default;

std::shared_ptr<Gateway::Slot> Gateway::find(const std::string& record_id) const {
    std::lock_guard lock(records_mu_);
    auto it = records_.find(record_id);
    return it == records_.end() ? nullptr : it->second;
}

void Gateway::emit(Slot& slot, EventKind kind, json payload) {
    Event candidate;
    candidate.ts = deps_.clock();
    candidate.kind = kind;
    candidate.record_id = slot.record.record_id;
    candidate.payload = std::move(payload);
    // Validate against a copy first so an illegal event never reaches the log.
    EvolutionRecord next = slot.record;
    apply_event(next, candidate);
    log_.append(kind, candidate.record_id, std::move(candidate.payload), candidate.ts);
    slot.record = std::move(next);
}

bool Gateway::sampled(std::uint64_t counter) const {
    const double rate = cfg_.eval.eval_sampling_rate;
    if (rate >= 1.0) return true;
    if (rate <= 0.0) return false;
    const double u = static_cast<double>(mix64(cfg_.seed ^ counter) >> 11) * 0x1.0p-53;
    return u < rate;
}

void Gateway::escalation_path(Slot& slot) {
    EvolutionRecord probe = slot.record;
    const auto example = make_pseudo_label(probe, slot.record.cloud_reference.value_or(""), 0);
    if (!example) {
        emit(slot, EventKind::pseudo_label_skipped, {{"note", probe.notes.back()}});
        return;
    }
    emit(slot, EventKind::pseudo_labeled, {{"output", example->output}});
    TrainingExample queued = *example;
    queued.created_at = slot.record.history.back().ts;
    queue_.enqueue(queued);
    emit(slot, EventKind::queued, json::object());
}

ChatResponse Gateway::handle_chat(const ChatRequest& request) {
    const std::int64_t started = deps_.clock();
    const std::string query = clean_text(request.message);
    if (query.empty()) throw GatewayError(400, "message is empty after cleaning");

    const std::uint64_t n = ++counter_;
    auto slot = std::make_shared<Slot>();
    std::unique_lock record_lock(slot->mu);
    {
        Event received;
        received.ts = deps_.clock();
        received.kind = EventKind::received;
        received.record_id = format_record_id(n);
        received.payload = {{"session_id", request.session_id}, {"query", query}};
        slot->record = record_from_received(received);
        std::lock_guard lock(records_mu_);
        if (records_.count(received.record_id)) throw GatewayError(500, "record id collision " + received.record_id);
        log_.append(EventKind::received, received.record_id, received.payload, received.ts);
        records_.emplace(received.record_id, slot);
    }
    const std::string& record_id = slot->record.record_id;

    GenerationResult end_answer;
    try {
        end_answer = deps_.end->generate({{"user", query}}, cfg_.generation);
    } catch (const std::exception& e) {
        emit(*slot, EventKind::end_failed, {{"error", e.what()}});
        throw GatewayError(502, std::string("end backend failed: ") + e.what(), record_id);
    }
    emit(*slot, EventKind::answered, {{"end_output", end_answer.text}, {"latency_ms", end_answer.latency_ms}});

    ChatResponse response;
    response.record_id = record_id;
    response.reply = end_answer.text;
    response.served_by = ServedBy::end;

    if (sampled(n)) {
        std::optional<ScoreBreakdown> breakdown;
        std::string cloud_text;
        try {
            cloud_text = escalate(query, *deps_.cloud, deps_.prompt, cfg_.generation).text;
            breakdown = evaluate_response(query, end_answer.text, cloud_text, cfg_.eval, *deps_.similarity,
                                          *deps_.relevance);
        } catch (const std::exception& e) {
            emit(*slot, EventKind::evaluation_unavailable, {{"error", e.what()}});
        }
        if (breakdown) {
            emit(*slot, EventKind::evaluated, {{"cloud_reference", cloud_text}, {"breakdown", breakdown_to_json(*breakdown)}});
            response.breakdown = breakdown;
            const Action action = decide_action(*breakdown, std::nullopt, cfg_.eval.tau);
            if (action.kind == ActionKind::accept) {
                emit(*slot, EventKind::accepted, {{"reason", to_string(action.reason)}});
            } else {
                emit(*slot, EventKind::escalated, {{"reason", to_string(action.reason)}});
                escalation_path(*slot);
                // Blank cloud text falls back to the end answer.
                if (cfg_.escalation_mode == EscalationMode::synchronous && slot->record.pseudo_label) {
                    response.reply = cloud_text;
                    response.served_by = ServedBy::cloud;
                }
            }
        }
    }

    response.latency_ms = deps_.clock() - started;
    emit(*slot, EventKind::responded,
         {{"served_by", to_string(response.served_by)}, {"reply", response.reply}, {"latency_ms", response.latency_ms}});
    record_lock.unlock();
    maybe_auto_flush();
    return response;
}

EvolutionRecord Gateway::handle_feedback(const std::string& record_id, Verdict verdict) {
    auto slot = find(record_id);
    if (!slot) throw GatewayError(404, "unknown record " + record_id);
    std::unique_lock lock(slot->mu);
    const EvolutionRecord& rec = slot->record;
    if (rec.state != RecordState::evaluated && rec.state != RecordState::accepted) {
        throw GatewayError(409, "record " + record_id + " is " + to_string(rec.state) +
                                    "; verdicts apply to evaluated or accepted records");
    }
    if (rec.human_verdict) throw GatewayError(409, "record " + record_id + " already has a verdict");

    emit(*slot, EventKind::feedback, {{"verdict", to_string(verdict)}});
    const Action action = decide_action(*slot->record.breakdown, verdict, cfg_.eval.tau);
    if (action.kind == ActionKind::escalate) {
        emit(*slot, EventKind::escalated, {{"reason", to_string(action.reason)}});
        escalation_path(*slot);
    } else if (slot->record.state == RecordState::evaluated) {
        emit(*slot, EventKind::accepted, {{"reason", to_string(action.reason)}});
    }
    EvolutionRecord result = slot->record;
    lock.unlock();
    maybe_auto_flush();
    return result;
}

ReviewPage Gateway::review_queue(std::size_t offset, std::size_t limit) const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(records_mu_);
        for (const auto& [id, slot] : records_) slots.push_back(slot);
    }
    ReviewPage page;
    page.offset = offset;
    page.limit = limit;
    for (const auto& slot : slots) {
        std::lock_guard lock(slot->mu);
        if (slot->record.state != RecordState::accepted || slot->record.human_verdict) continue;
        if (page.total >= offset && page.items.size() < limit) page.items.push_back(slot->record);
        ++page.total;
    }
    return page;
}

std::optional<EvolutionRecord> Gateway::record(const std::string& record_id) const {
    auto slot = find(record_id);
    if (!slot) return std::nullopt;
    std::lock_guard lock(slot->mu);
    return slot->record;
}

Metrics Gateway::metrics() const { return log_.metrics(); }

std::size_t Gateway::queue_depth() const { return queue_.depth(); }

std::vector<TrainingExample> Gateway::pending() const { return queue_.pending(); }

DrainResult Gateway::flush(std::size_t batch_size) {
    std::lock_guard flush_lock(flush_mu_);
    DrainResult result = queue_.drain(batch_size, *deps_.trainer, cfg_.training);
    for (const auto& example : result.batch) {
        if (!example.source_record) continue;
        auto slot = find(*example.source_record);
        if (!slot) continue;
        std::lock_guard lock(slot->mu);
        // A re-delivered batch may name records that were already dispatched.
        if (slot->record.state != RecordState::queued) continue;
        emit(*slot, EventKind::dispatched, {{"job_id", result.job_id}});
    }
    return result;
}

void Gateway::maybe_auto_flush() {
    if (!cfg_.queue_auto_flush) return;
    const auto batch = static_cast<std::size_t>(cfg_.queue_batch_size);
    while (queue_.depth() >= batch) {
        if (flush(batch).dispatched() == 0) break;
    }
}

json record_to_json(const EvolutionRecord& r, std::optional<int> decimals) {
    const auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
    json history = json::array();
    for (const auto& change : r.history) history.push_back({{"state", to_string(change.state)}, {"ts", change.ts}});
    return {{"record_id", r.record_id},
            {"session_id", r.session_id},
            {"query", r.query},
            {"end_output", r.end_output},
            {"cloud_reference", opt(r.cloud_reference)},
            {"breakdown", r.breakdown ? breakdown_to_json(*r.breakdown, decimals) : json(nullptr)},
            {"human_verdict", r.human_verdict ? json(to_string(*r.human_verdict)) : json(nullptr)},
            {"pseudo_label", opt(r.pseudo_label)},
            {"job_id", opt(r.job_id)},
            {"state", to_string(r.state)},
            {"history", std::move(history)},
            {"notes", r.notes}};
}

json response_to_json(const ChatResponse& response, std::optional<int> decimals) {
    json j = {{"record_id", response.record_id},
              {"reply", response.reply},
              {"served_by", to_string(response.served_by)},
              {"latency_ms", response.latency_ms}};
    j["breakdown"] = response.breakdown ? breakdown_to_json(*response.breakdown, decimals) : json(nullptr);
    return j;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& record_id = {}) {
    json body = {{"error", message}};
    if (!record_id.empty()) body["record_id"] = record_id;
    send_json(res, status, body);
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw GatewayError(400, "request body must be a JSON object");
    return body;
}

std::string string_field(const json& body, const char* name) {
    if (!body.contains(name) || !body[name].is_string()) {
        throw GatewayError(400, std::string("field '") + name + "' must be a string");
    }
    return body[name].get<std::string>();
}

Verdict verdict_field(const json& body) {
    auto v = parse_verdict(string_field(body, "verdict"));
    if (!v) throw GatewayError(400, "verdict must be 'satisfied' or 'dissatisfied'");
    return *v;
}

std::size_t size_param(const httplib::Request& req, const char* name, std::size_t fallback, std::size_t max) {
    if (!req.has_param(name)) return fallback;
    const std::string text = req.get_param_value(name);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw GatewayError(400, std::string("query parameter '") + name + "' must be a nonnegative integer");
    }
    return std::min(value, max);
}

}  // namespace

GatewayServer::GatewayServer(Gateway& gateway) : gateway_(gateway), server_(std::make_unique<httplib::Server>()) {
    const EccConfig& cfg = gateway_.config();
    if (!cfg.auth_token_env.empty()) {
        const char* token = std::getenv(cfg.auth_token_env.c_str());
        if (!token || !*token) {
            throw std::runtime_error("gateway.token_env names " + cfg.auth_token_env + ", which is not set");
        }
        token_ = token;
    }

    auto& srv = *server_;
    const std::string origin = cfg.cors_origin;
    srv.set_default_headers({{"Access-Control-Allow-Origin", origin},
                             {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (token_.empty() || req.method == "OPTIONS") return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + token_) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        send_error(res, 401, "missing or wrong bearer token");
        return httplib::Server::HandlerResponse::Handled;
    });

    // Every handler funnels errors through the same JSON shape.
    const auto guarded = [](auto fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const GatewayError& e) {
                send_error(res, e.status(), e.what(), e.record_id());
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        };
    };

    srv.Post("/v1/chat", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const json body = parse_body(req);
                 ChatRequest chat;
                 chat.session_id = string_field(body, "session_id");
                 chat.message = string_field(body, "message");
                 send_json(res, 200, response_to_json(gateway_.handle_chat(chat)));
             }));

    srv.Post("/v1/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const json body = parse_body(req);
                 const auto rec = gateway_.handle_feedback(string_field(body, "record_id"), verdict_field(body));
                 send_json(res, 200, record_to_json(rec));
             }));

    srv.Get("/v1/review/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto page = gateway_.review_queue(size_param(req, "offset", 0, SIZE_MAX),
                                                        size_param(req, "limit", 20, 100));
                json items = json::array();
                for (const auto& rec : page.items) items.push_back(record_to_json(rec));
                send_json(res, 200,
                          {{"items", std::move(items)}, {"total", page.total}, {"offset", page.offset}, {"limit", page.limit}});
            }));

    srv.Post(R"(/v1/review/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const json body = parse_body(req);
                 send_json(res, 200, record_to_json(gateway_.handle_feedback(req.matches[1], verdict_field(body))));
             }));

    srv.Get("/v1/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
                json m = gateway_.metrics().to_json();
                m["mean_final"] = round_to(m["mean_final"].get<double>(), 3);
                send_json(res, 200, m);
            }));

    srv.Get(R"(/v1/records/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto rec = gateway_.record(req.matches[1]);
                if (!rec) throw GatewayError(404, "unknown record " + std::string(req.matches[1]));
                send_json(res, 200, record_to_json(*rec));
            }));
}

GatewayServer::~GatewayServer() = default;

int GatewayServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool GatewayServer::serve() { return server_->listen_after_bind(); }

void GatewayServer::stop() { server_->stop(); }

}  // namespace ecc
