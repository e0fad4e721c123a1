#include "ecc/event_log.hpp"

#include "ecc/text.hpp"

#include <fstream>
#include <sstream>

namespace ecc {

using nlohmann::json;

namespace {

constexpr EventKind kAllKinds[] = {
    EventKind::received,       EventKind::answered,          EventKind::end_failed,
    EventKind::evaluated,      EventKind::evaluation_unavailable, EventKind::accepted,
    EventKind::escalated,      EventKind::escalation_failed, EventKind::pseudo_labeled,
    EventKind::pseudo_label_skipped, EventKind::queued,      EventKind::dispatched,
    EventKind::responded,      EventKind::feedback,
};

}  // namespace

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::received: return "received";
        case EventKind::answered: return "answered";
        case EventKind::end_failed: return "end_failed";
        case EventKind::evaluated: return "evaluated";
        case EventKind::evaluation_unavailable: return "evaluation_unavailable";
        case EventKind::accepted: return "accepted";
        case EventKind::escalated: return "escalated";
        case EventKind::escalation_failed: return "escalation_failed";
        case EventKind::pseudo_labeled: return "pseudo_labeled";
        case EventKind::pseudo_label_skipped: return "pseudo_label_skipped";
        case EventKind::queued: return "queued";
        case EventKind::dispatched: return "dispatched";
        case EventKind::responded: return "responded";
        case EventKind::feedback: return "feedback";
    }
    return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
    for (auto k : kAllKinds) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::string Event::to_line() const {
    json j = {{"seq", seq}, {"ts", ts}, {"kind", to_string(kind)}, {"record_id", record_id}, {"payload", payload}};
    return j.dump();
}

Event Event::from_line(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("not a JSON object");
    if (!j.contains("seq") || !j["seq"].is_number_unsigned() || !j.contains("ts") || !j["ts"].is_number_integer() ||
        !j.contains("kind") || !j["kind"].is_string() || !j.contains("record_id") || !j["record_id"].is_string() ||
        !j.contains("payload") || !j["payload"].is_object()) {
        throw std::invalid_argument("missing or mistyped event field");
    }
    auto kind = parse_event_kind(j["kind"].get<std::string>());
    if (!kind) throw std::invalid_argument("unknown event kind '" + j["kind"].get<std::string>() + "'");
    Event e;
    e.seq = j["seq"].get<std::uint64_t>();
    e.ts = j["ts"].get<std::int64_t>();
    e.kind = *kind;
    e.record_id = j["record_id"].get<std::string>();
    e.payload = std::move(j["payload"]);
    return e;
}

json breakdown_to_json(const ScoreBreakdown& b, std::optional<int> decimals) {
    const auto r = [&](double x) { return decimals ? round_to(x, *decimals) : x; };
    return {{"sim", r(b.sim)},
            {"rel_end", r(b.rel_end)},
            {"rel_cloud", r(b.rel_cloud)},
            {"alpha", b.alpha},
            {"theta", b.theta},
            {"theta_fallback_applied", b.theta_fallback_applied},
            {"final", r(b.final_score)}};
}

ScoreBreakdown breakdown_from_json(const json& j) {
    ScoreBreakdown b;
    b.sim = j.at("sim").get<double>();
    b.rel_end = j.at("rel_end").get<double>();
    b.rel_cloud = j.at("rel_cloud").get<double>();
    b.alpha = j.at("alpha").get<double>();
    b.theta = j.at("theta").get<double>();
    b.theta_fallback_applied = j.at("theta_fallback_applied").get<bool>();
    b.final_score = j.at("final").get<double>();
    return b;
}

void Metrics::apply(const Event& event) {
    switch (event.kind) {
        case EventKind::received: ++queries; break;
        case EventKind::answered: break;
        case EventKind::end_failed: ++end_failures; break;
        case EventKind::evaluated:
            ++evaluated;
            final_sum += event.payload.at("breakdown").at("final").get<double>();
            break;
        case EventKind::evaluation_unavailable: ++evaluation_unavailable; break;
        case EventKind::accepted: ++accepted; break;
        case EventKind::escalated: ++escalations; break;
        case EventKind::escalation_failed: ++escalation_failures; break;
        case EventKind::pseudo_labeled: ++pseudo_labels; break;
        case EventKind::pseudo_label_skipped: break;
        case EventKind::queued: ++queued; break;
        case EventKind::dispatched: ++dispatched; break;
        case EventKind::responded:
            if (event.payload.at("served_by").get<std::string>() == "cloud") {
                ++served_cloud;
            } else {
                ++served_end;
            }
            break;
        case EventKind::feedback: ++feedback; break;
    }
}

json Metrics::to_json() const {
    return {{"queries", queries},
            {"evaluated", evaluated},
            {"accepted", accepted},
            {"escalations", escalations},
            {"escalation_rate", escalation_rate()},
            {"mean_final", mean_final()},
            {"served_by", {{"end", served_end}, {"cloud", served_cloud}}},
            {"queue_depth", queue_depth()},
            {"counts",
             {{"end_failures", end_failures},
              {"evaluation_unavailable", evaluation_unavailable},
              {"escalation_failures", escalation_failures},
              {"pseudo_labels", pseudo_labels},
              {"feedback", feedback},
              {"queued", queued},
              {"dispatched", dispatched}}}};
}

EvolutionRecord record_from_received(const Event& e) {
    if (e.kind != EventKind::received) throw std::invalid_argument("record must start with a received event");
    EvolutionRecord r;
    r.record_id = e.record_id;
    r.session_id = e.payload.at("session_id").get<std::string>();
    r.query = e.payload.at("query").get<std::string>();
    r.history = {{RecordState::received, e.ts}};
    return r;
}

void apply_event(EvolutionRecord& r, const Event& e) {
    const auto note = [&](const std::string& prefix, const char* field) {
        r.notes.push_back(prefix + e.payload.at(field).get<std::string>());
    };
    switch (e.kind) {
        case EventKind::received:
            throw IllegalTransition("record " + r.record_id + " received twice");
        case EventKind::answered:
            r.end_output = e.payload.at("end_output").get<std::string>();
            r.advance(RecordState::answered, e.ts);
            break;
        case EventKind::end_failed: note("end backend failed: ", "error"); break;
        case EventKind::evaluated:
            r.cloud_reference = e.payload.at("cloud_reference").get<std::string>();
            r.breakdown = breakdown_from_json(e.payload.at("breakdown"));
            r.advance(RecordState::evaluated, e.ts);
            break;
        case EventKind::evaluation_unavailable: note("evaluation unavailable: ", "error"); break;
        case EventKind::accepted: r.advance(RecordState::accepted, e.ts); break;
        case EventKind::escalated: r.advance(RecordState::escalated, e.ts); break;
        case EventKind::escalation_failed: note("escalation failed: ", "error"); break;
        case EventKind::pseudo_labeled:
            if (r.state != RecordState::escalated) {
                throw IllegalTransition("record " + r.record_id + ": pseudo-label outside escalated state");
            }
            r.pseudo_label = e.payload.at("output").get<std::string>();
            r.advance(RecordState::pseudo_labeled, e.ts);
            break;
        case EventKind::pseudo_label_skipped: note("", "note"); break;
        case EventKind::queued: r.advance(RecordState::queued, e.ts); break;
        case EventKind::dispatched:
            r.job_id = e.payload.at("job_id").get<std::string>();
            r.advance(RecordState::dispatched, e.ts);
            break;
        case EventKind::responded: break;
        case EventKind::feedback: {
            auto v = parse_verdict(e.payload.at("verdict").get<std::string>());
            if (!v) throw std::invalid_argument("bad verdict");
            if (r.human_verdict) throw IllegalTransition("record " + r.record_id + " already has a verdict");
            r.set_verdict(*v);
            break;
        }
    }
}

void RecordFold::apply(const Event& e) {
    if (e.kind == EventKind::received) {
        if (records_.count(e.record_id)) throw IllegalTransition("record " + e.record_id + " received twice");
        records_.emplace(e.record_id, record_from_received(e));
        return;
    }
    auto it = records_.find(e.record_id);
    if (it == records_.end()) throw IllegalTransition("event for unknown record " + e.record_id);
    apply_event(it->second, e);
}

ReplayResult replay_events(const std::filesystem::path& path) {
    ReplayResult result;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (!std::filesystem::exists(path)) return result;
        throw EventLogError("cannot read event log " + path.string(), 0);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    RecordFold fold;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
        ++lineno;
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            throw EventLogError(path.string() + ":" + std::to_string(lineno) + ": truncated line (no newline)",
                                lineno);
        }
        const std::string_view line(content.data() + pos, nl - pos);
        pos = nl + 1;
        Event e;
        try {
            e = Event::from_line(line);
        } catch (const std::exception& ex) {
            throw EventLogError(path.string() + ":" + std::to_string(lineno) + ": corrupt event: " + ex.what(),
                                lineno);
        }
        if (e.seq != result.last_seq + 1) {
            throw EventLogError(path.string() + ":" + std::to_string(lineno) + ": sequence gap, expected " +
                                    std::to_string(result.last_seq + 1) + " got " + std::to_string(e.seq),
                                lineno);
        }
        try {
            result.metrics.apply(e);
            fold.apply(e);
        } catch (const std::exception& ex) {
            throw EventLogError(path.string() + ":" + std::to_string(lineno) + ": inconsistent event: " + ex.what(),
                                lineno);
        }
        result.last_seq = e.seq;
        result.events.push_back(std::move(e));
    }
    result.records = fold.take();
    return result;
}

EventLog::EventLog(const std::filesystem::path& path) : file_(path) {
    ReplayResult existing = replay_events(path);
    seq_ = existing.last_seq;
    metrics_ = existing.metrics;
    recovered_queries_ = existing.metrics.queries;
    recovered_ = std::move(existing.records);
}

Event EventLog::append(EventKind kind, const std::string& record_id, json payload, std::int64_t ts) {
    std::lock_guard lock(mu_);
    Event e;
    e.seq = seq_ + 1;
    e.ts = ts;
    e.kind = kind;
    e.record_id = record_id;
    e.payload = std::move(payload);
    file_.append(e.to_line() + "\n");
    seq_ = e.seq;
    metrics_.apply(e);
    return e;
}

Metrics EventLog::metrics() const {
    std::lock_guard lock(mu_);
    return metrics_;
}

std::uint64_t EventLog::last_seq() const {
    std::lock_guard lock(mu_);
    return seq_;
}

}  // namespace ecc
