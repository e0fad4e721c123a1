#include "ecc/simharness.hpp"

#include "ecc/text.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ecc {

using nlohmann::json;

ScoreScript load_score_script(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimulationError("cannot read score script " + path.string());
    ScoreScript script;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("query") || !j["query"].is_string()) {
            throw SimulationError(where + "expected {\"query\", \"sim\", \"rel_end\", \"rel_cloud\"}");
        }
        ScriptedScore s;
        for (auto [key, field] : {std::pair{"sim", &s.sim}, {"rel_end", &s.rel_end}, {"rel_cloud", &s.rel_cloud}}) {
            if (!j.contains(key) || !j[key].is_number()) throw SimulationError(where + "missing number '" + key + "'");
            *field = j[key].get<double>();
            if (!(*field >= 0.0 && *field <= 1.0)) throw SimulationError(where + "'" + key + "' outside [0,1]");
        }
        const std::string query = clean_text(j["query"].get<std::string>());
        if (!script.emplace(query, s).second) throw SimulationError(where + "duplicate query '" + query + "'");
    }
    return script;
}

ScorerPair scripted_scorers(const ScoreScript& script, const ReplayBackend& end, const ReplayBackend& cloud) {
    using Table = std::map<std::pair<std::string, std::string>, double>;
    Table sim_table;
    Table rel_table;
    const auto put = [](Table& table, std::string a, std::string b, double value, const std::string& query) {
        auto [it, inserted] = table.emplace(std::pair{std::move(a), std::move(b)}, value);
        if (!inserted && it->second != value) {
            throw SimulationError("score script is ambiguous: query '" + query +
                                  "' needs a different score for a string pair already scripted");
        }
    };
    for (const auto& [query, s] : script) {
        const auto end_answer = end.response_for(query);
        const auto cloud_answer = cloud.response_for(query);
        if (!end_answer) throw SimulationError("scripted query missing from end fixture: '" + query + "'");
        if (!cloud_answer) throw SimulationError("scripted query missing from cloud fixture: '" + query + "'");
        put(sim_table, *end_answer, *cloud_answer, s.sim, query);
        put(rel_table, query, *end_answer, s.rel_end, query);
        put(rel_table, query, *cloud_answer, s.rel_cloud, query);
    }
    auto fallback = std::make_shared<const NgramCosineScorer>();
    return {std::make_shared<const TableScorer>(std::move(sim_table), fallback),
            std::make_shared<const TableScorer>(std::move(rel_table), fallback)};
}

SimulationReport SimulationReport::from_metrics(const Metrics& m) {
    SimulationReport r;
    r.queries = m.queries;
    r.escalations = m.escalations;
    r.escalation_rate = m.escalation_rate();
    r.mean_final = m.mean_final();
    r.served_end = m.served_end;
    r.served_cloud = m.served_cloud;
    r.queue_depth = m.queue_depth();
    return r;
}

json SimulationReport::to_json() const {
    return {{"queries", queries},
            {"escalations", escalations},
            {"escalation_rate", escalation_rate},
            {"mean_final", mean_final},
            {"served_by", {{"end", served_end}, {"cloud", served_cloud}}},
            {"queue_depth", queue_depth}};
}

std::string SimulationReport::to_table() const {
    std::ostringstream out;
    out << "queries          " << queries << "\n"
        << "escalations      " << escalations << "\n"
        << "escalation_rate  " << format_fixed(escalation_rate, 3) << "\n"
        << "mean_final       " << format_fixed(mean_final, 3) << "\n"
        << "served_by end    " << served_end << "\n"
        << "served_by cloud  " << served_cloud << "\n"
        << "queue_depth      " << queue_depth << "\n"
        << "wall_ms          " << wall_ms << "\n";
    return out.str();
}

SimulationRun replay_simulation(const std::vector<SessionResponsePair>& pairs, const EccConfig& cfg,
                                std::optional<ScorerPair> scorers) {
    if (cfg.end_backend.kind != BackendKind::replay || cfg.cloud_backend.kind != BackendKind::replay) {
        throw SimulationError("simulations need replay backends for both end and cloud");
    }
    if (std::filesystem::exists(cfg.log_path) && std::filesystem::file_size(cfg.log_path) > 0) {
        throw SimulationError("simulation log " + cfg.log_path + " already holds events");
    }
    const auto wall_start = std::chrono::steady_clock::now();

    auto ticks = std::make_shared<std::atomic<std::int64_t>>(0);
    BackendOptions options;
    options.clock = [ticks] { return ticks->fetch_add(1) + 1; };
    GatewayDeps deps = make_gateway_deps(cfg, options);

    const auto& end = dynamic_cast<const ReplayBackend&>(*deps.end);
    const auto& cloud = dynamic_cast<const ReplayBackend&>(*deps.cloud);
    for (const auto& pair : pairs) {
        const std::string& q = pair.last_customer_text();
        if (!end.contains(q)) throw SimulationError("replay miss on end fixture for query '" + clean_text(q) + "'");
        if (!cloud.contains(q)) throw SimulationError("replay miss on cloud fixture for query '" + clean_text(q) + "'");
    }
    if (scorers) {
        deps.similarity = scorers->similarity;
        deps.relevance = scorers->relevance;
    }

    SimulationRun run;
    {
        Gateway gateway(cfg, std::move(deps));
        for (const auto& pair : pairs) {
            const auto hash = pair.pair_id.find('#');
            ChatRequest req{pair.pair_id.substr(0, hash), pair.last_customer_text()};
            run.responses.push_back(gateway.handle_chat(req));
        }
        run.live = gateway.metrics();
        run.queued = gateway.pending();
    }

    run.replay = replay_events(cfg.log_path);
    run.report = SimulationReport::from_metrics(run.replay.metrics);
    run.report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                              wall_start)
                             .count();
    return run;
}

std::vector<std::string> row_maxima(const std::vector<std::string>& columns, const std::vector<double>& row) {
    if (row.empty() || row.size() != columns.size()) throw std::invalid_argument("row and column counts differ");
    double best = row.front();
    for (double v : row) best = std::max(best, v);
    std::vector<std::string> winners;
    for (std::size_t c = 0; c < row.size(); ++c) {
        if (row[c] == best) winners.push_back(columns[c]);
    }
    return winners;
}

json GridReport::to_json() const {
    json out = {{"columns", columns}, {"rows", json::array()}};
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out["rows"].push_back({{"input", rows[r]}, {"cells", cells[r]}, {"row_maxima", row_maxima[r]}});
    }
    return out;
}

std::string GridReport::to_tsv() const {
    std::ostringstream out;
    out << "input";
    for (const auto& c : columns) out << '\t' << c;
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out << rows[r];
        for (double v : cells[r]) out << '\t' << format_fixed(v, 3);
        out << '\n';
    }
    return out.str();
}

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return fields;
}

double parse_score(const std::string& text, const std::string& where) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw std::runtime_error(where + "bad score '" + text + "'");
    if (!(value >= 0.0 && value <= 1.0)) throw std::runtime_error(where + "score " + text + " outside [0,1]");
    return value;
}

}  // namespace

GridReport parse_grid(std::string_view text, const std::string& source) {
    GridReport grid;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    bool header = true;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        auto fields = split_tabs(line);
        if (header) {
            if (fields.size() < 2) throw std::runtime_error(where + "header needs at least one variant label");
            grid.columns.assign(fields.begin() + 1, fields.end());
            for (std::size_t i = 0; i < grid.columns.size(); ++i) {
                if (grid.columns[i].empty()) throw std::runtime_error(where + "empty variant label");
                for (std::size_t j = 0; j < i; ++j) {
                    if (grid.columns[i] == grid.columns[j]) {
                        throw std::runtime_error(where + "duplicate variant label '" + grid.columns[i] + "'");
                    }
                }
            }
            header = false;
            continue;
        }
        if (fields.size() != grid.columns.size() + 1) {
            throw std::runtime_error(where + "expected " + std::to_string(grid.columns.size() + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw std::runtime_error(where + "empty input label");
        std::vector<double> row;
        for (std::size_t c = 1; c < fields.size(); ++c) row.push_back(round_to(parse_score(fields[c], where), 3));
        grid.rows.push_back(fields[0]);
        grid.row_maxima.push_back(row_maxima(grid.columns, row));
        grid.cells.push_back(std::move(row));
    }
    if (header) throw std::runtime_error(source + ": missing header");
    if (grid.rows.empty()) throw std::runtime_error(source + ": no rows");
    return grid;
}

GridReport load_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read grid " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_grid(buf.str(), path.string());
}

GridReport eval_grid(const std::vector<std::string>& inputs, const std::vector<GridVariant>& variants,
                     ModelBackend& cloud, const PromptTemplate& prompt, const EvalConfig& eval,
                     const GenerationParams& generation, const ScorerPair& scorers) {
    if (inputs.empty() || variants.empty()) throw std::invalid_argument("grid needs at least one input and one variant");
    GridReport grid;
    for (const auto& v : variants) grid.columns.push_back(v.label);
    for (const auto& input : inputs) {
        const std::string query = clean_text(input);
        const std::string cloud_text = escalate(query, cloud, prompt, generation).text;
        std::vector<double> row;
        for (const auto& v : variants) {
            const std::string reply = v.backend->generate({{"user", query}}, generation).text;
            const auto b = evaluate_response(query, reply, cloud_text, eval, *scorers.similarity, *scorers.relevance);
            row.push_back(round_to(b.final_score, 3));
        }
        grid.rows.push_back(input);
        grid.row_maxima.push_back(row_maxima(grid.columns, row));
        grid.cells.push_back(std::move(row));
    }
    return grid;
}

std::vector<RowWinners> analyze_published_grid(const GridReport& grid) {
    std::vector<RowWinners> out;
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        const auto winners = row_maxima(grid.columns, grid.cells[r]);
        double best = grid.cells[r].front();
        for (double v : grid.cells[r]) best = std::max(best, v);
        out.push_back({grid.rows[r], winners, best});
    }
    return out;
}

}  // namespace ecc
