#include "ecc/evolution.hpp"

#include "ecc/embedding.hpp"
#include "ecc/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace ecc {

using nlohmann::json;

std::string to_string(RecordState state) {
    switch (state) {
        case RecordState::received: return "received";
        case RecordState::answered: return "answered";
        case RecordState::evaluated: return "evaluated";
        case RecordState::accepted: return "accepted";
        case RecordState::escalated: return "escalated";
        case RecordState::pseudo_labeled: return "pseudo_labeled";
        case RecordState::queued: return "queued";
        case RecordState::dispatched: return "dispatched";
    }
    return "received";
}

std::optional<RecordState> parse_record_state(std::string_view text) {
    for (auto s : {RecordState::received, RecordState::answered, RecordState::evaluated, RecordState::accepted,
                   RecordState::escalated, RecordState::pseudo_labeled, RecordState::queued, RecordState::dispatched}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::string to_string(Verdict verdict) { return verdict == Verdict::satisfied ? "satisfied" : "dissatisfied"; }

std::optional<Verdict> parse_verdict(std::string_view text) {
    if (text == "satisfied") return Verdict::satisfied;
    if (text == "dissatisfied") return Verdict::dissatisfied;
    return std::nullopt;
}

bool is_legal_transition(RecordState from, RecordState to) {
    using S = RecordState;
    switch (from) {
        case S::received: return to == S::answered;
        case S::answered: return to == S::evaluated;
        case S::evaluated: return to == S::accepted || to == S::escalated;
        case S::accepted: return to == S::escalated;
        case S::escalated: return to == S::pseudo_labeled;
        case S::pseudo_labeled: return to == S::queued;
        case S::queued: return to == S::dispatched;
        case S::dispatched: return false;
    }
    return false;
}

void EvolutionRecord::advance(RecordState to, std::int64_t ts) {
    if (!is_legal_transition(state, to)) {
        throw IllegalTransition("record " + record_id + ": illegal transition " + to_string(state) + " -> " +
                                to_string(to));
    }
    state = to;
    history.push_back({to, ts});
}

void EvolutionRecord::set_verdict(Verdict verdict) {
    if (state == RecordState::received || state == RecordState::answered) {
        throw IllegalTransition("record " + record_id + ": verdict before evaluation (state " + to_string(state) + ")");
    }
    human_verdict = verdict;
}

std::string to_string(ActionKind kind) { return kind == ActionKind::accept ? "accept" : "escalate"; }

std::string to_string(ActionReason reason) {
    switch (reason) {
        case ActionReason::score_below_tau: return "score_below_tau";
        case ActionReason::human_dissatisfied: return "human_dissatisfied";
        case ActionReason::score_ok: return "score_ok";
        case ActionReason::human_satisfied_override: return "human_satisfied_override";
    }
    return "score_ok";
}

Action decide_action(const ScoreBreakdown& breakdown, std::optional<Verdict> human_verdict, double tau) {
    if (human_verdict == Verdict::dissatisfied) return {ActionKind::escalate, ActionReason::human_dissatisfied};
    if (human_verdict == Verdict::satisfied) return {ActionKind::accept, ActionReason::human_satisfied_override};
    if (breakdown.final_score < tau) return {ActionKind::escalate, ActionReason::score_below_tau};
    return {ActionKind::accept, ActionReason::score_ok};
}

GenerationResult escalate(std::string_view query, ModelBackend& cloud, const PromptTemplate& tmpl,
                          const GenerationParams& params) {
    if (clean_text(query).empty()) throw BackendError(BackendErrorKind::invalid_request, "escalated query is empty");
    const RenderedPrompt prompt = render_messages(tmpl, query, params);
    return cloud.generate(prompt.messages, params);
}

GenerationResult escalate(std::string_view query, const BackendConfig& cloud, const PromptTemplate& tmpl,
                          const GenerationParams& params) {
    auto backend = make_backend(cloud);
    return escalate(query, *backend, tmpl, params);
}

std::string to_string(ExampleOrigin origin) {
    return origin == ExampleOrigin::cloud_pseudo_label ? "cloud_pseudo_label" : "corpus";
}

std::string example_to_export_line(const TrainingExample& example) {
    json j = {{"query", example.query},
              {"output", example.output},
              {"origin", to_string(example.origin)},
              {"source_record", example.source_record ? json(*example.source_record) : json(nullptr)}};
    return j.dump();
}

TrainingExample example_from_json(const json& j) {
    if (!j.is_object() || !j.contains("query") || !j.contains("output") || !j["query"].is_string() ||
        !j["output"].is_string()) {
        throw std::invalid_argument("training example needs string 'query' and 'output'");
    }
    TrainingExample ex;
    ex.query = j["query"].get<std::string>();
    ex.output = j["output"].get<std::string>();
    const std::string origin = j.value("origin", std::string("cloud_pseudo_label"));
    if (origin == "cloud_pseudo_label") {
        ex.origin = ExampleOrigin::cloud_pseudo_label;
    } else if (origin == "corpus") {
        ex.origin = ExampleOrigin::corpus;
    } else {
        throw std::invalid_argument("unknown example origin '" + origin + "'");
    }
    if (j.contains("source_record") && j["source_record"].is_string()) {
        ex.source_record = j["source_record"].get<std::string>();
    }
    if (j.contains("created_at") && j["created_at"].is_number_integer()) ex.created_at = j["created_at"].get<std::int64_t>();
    return ex;
}

std::optional<TrainingExample> make_pseudo_label(EvolutionRecord& record, std::string_view cloud_text,
                                                 std::int64_t ts) {
    if (record.state != RecordState::escalated) {
        throw IllegalTransition("record " + record.record_id + ": pseudo-label requires state escalated, not " +
                                to_string(record.state));
    }
    std::string output = clean_text(cloud_text);
    if (output.empty()) {
        record.notes.push_back("cloud answer empty after cleaning; no pseudo-label");
        return std::nullopt;
    }
    record.advance(RecordState::pseudo_labeled, ts);
    record.pseudo_label = output;
    TrainingExample ex;
    ex.query = record.query;
    ex.output = std::move(output);
    ex.origin = ExampleOrigin::cloud_pseudo_label;
    ex.source_record = record.record_id;
    ex.created_at = ts;
    return ex;
}

std::uint64_t example_key(std::string_view query, std::string_view output) {
    std::string joined;
    joined.reserve(query.size() + output.size() + 1);
    joined.append(query);
    joined.push_back('\0');
    joined.append(output);
    return fnv1a64(joined);
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

FileSinkTrainer::FileSinkTrainer(std::filesystem::path output) : output_(std::move(output)) {
    for (const auto& line : read_lines(output_)) {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        try {
            auto ex = example_from_json(j);
            seen_.insert(example_key(ex.query, ex.output));
        } catch (const std::invalid_argument&) {
        }
    }
}

std::string FileSinkTrainer::submit(const TrainingJobSpec&, const std::filesystem::path& batch_file) {
    std::ifstream in(batch_file, std::ios::binary);
    if (!in) throw TrainerError("file_sink: cannot read batch " + batch_file.string());
    std::string lines;
    std::string line;
    std::vector<std::uint64_t> added;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw TrainerError("file_sink: corrupt batch line in " + batch_file.string());
        TrainingExample ex = example_from_json(j);
        const auto key = example_key(ex.query, ex.output);
        if (seen_.count(key)) continue;
        if (std::find(added.begin(), added.end(), key) != added.end()) continue;
        added.push_back(key);
        lines += example_to_export_line(ex);
        lines += '\n';
    }
    try {
        AppendFile out(output_);
        if (!lines.empty()) out.append(lines);
    } catch (const std::exception& e) {
        throw TrainerError(std::string("file_sink: ") + e.what());
    }
    seen_.insert(added.begin(), added.end());
    return "file_sink-" + std::to_string(++jobs_) + "-" + std::to_string(added.size());
}

std::string NoopTrainer::submit(const TrainingJobSpec&, const std::filesystem::path& batch_file) {
    ++batches_;
    examples_ += read_lines(batch_file).size();
    return "noop-" + std::to_string(batches_);
}

std::unique_ptr<Trainer> make_trainer(const EccConfig& cfg) {
    if (cfg.trainer == TrainerKind::noop) return std::make_unique<NoopTrainer>();
    return std::make_unique<FileSinkTrainer>(cfg.trainer_output);
}

TrainingQueue::TrainingQueue(std::optional<std::filesystem::path> journal) : journal_path_(std::move(journal)) {
    if (journal_path_) {
        load();
        journal_ = std::make_unique<AppendFile>(*journal_path_);
    }
}

void TrainingQueue::load() {
    std::ifstream in(*journal_path_, std::ios::binary);
    if (!in) return;
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    std::size_t pos = 0;
    std::size_t lineno = 0;
    while (pos < content.size()) {
        ++lineno;
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            // Torn final write: never acknowledged, so dropping it loses nothing.
            break;
        }
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("op")) {
            throw std::runtime_error(journal_path_->string() + ":" + std::to_string(lineno) + ": corrupt queue entry");
        }
        const std::string op = j["op"].get<std::string>();
        if (op == "enqueue") {
            items_.push_back(example_from_json(j.at("example")));
        } else if (op == "ack") {
            const auto count = j.at("count").get<std::size_t>();
            if (count > items_.size()) {
                throw std::runtime_error(journal_path_->string() + ":" + std::to_string(lineno) +
                                         ": ack exceeds queue depth");
            }
            items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(count));
            ++drains_;
        } else {
            throw std::runtime_error(journal_path_->string() + ":" + std::to_string(lineno) + ": unknown op '" + op +
                                     "'");
        }
    }
    if (pos < content.size()) {
        // Trim the torn tail so later appends start on a fresh line.
        std::filesystem::resize_file(*journal_path_, pos);
    }
}

std::size_t TrainingQueue::enqueue(const TrainingExample& example) {
    std::lock_guard lock(mu_);
    if (journal_) {
        json j = json::parse(example_to_export_line(example));
        j["created_at"] = example.created_at;
        journal_->append(json{{"op", "enqueue"}, {"example", j}}.dump() + "\n");
    }
    items_.push_back(example);
    return items_.size();
}

std::size_t TrainingQueue::depth() const {
    std::lock_guard lock(mu_);
    return items_.size();
}

std::vector<TrainingExample> TrainingQueue::pending() const {
    std::lock_guard lock(mu_);
    return {items_.begin(), items_.end()};
}

DrainResult TrainingQueue::drain(std::size_t batch_size, Trainer& trainer, const TrainingJobSpec& spec) {
    if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
    std::lock_guard lock(mu_);
    DrainResult result;
    const std::size_t n = std::min(batch_size, items_.size());
    if (n == 0) return result;
    result.batch.assign(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n));

    std::filesystem::path batch_file =
        journal_path_ ? std::filesystem::path(journal_path_->string() + ".batch")
                      : std::filesystem::temp_directory_path() /
                            ("ecc-batch-" + std::to_string(::getpid()) + "-" + std::to_string(drains_) + ".jsonl");
    {
        std::ofstream out(batch_file, std::ios::binary | std::ios::trunc);
        if (!out) throw TrainerError("cannot write batch file " + batch_file.string());
        for (const auto& ex : result.batch) out << example_to_export_line(ex) << '\n';
        if (!out.flush()) throw TrainerError("cannot write batch file " + batch_file.string());
    }

    try {
        result.job_id = trainer.submit(spec, batch_file);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(batch_file, ec);
        throw;
    }
    std::error_code ec;
    std::filesystem::remove(batch_file, ec);

    if (journal_) journal_->append(json{{"op", "ack"}, {"count", n}, {"job_id", result.job_id}}.dump() + "\n");
    items_.erase(items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(n));
    ++drains_;
    return result;
}

}  // namespace ecc
