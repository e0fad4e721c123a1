#include "ecc/cli.hpp"

#include "ecc/config.hpp"
#include "ecc/corpus.hpp"
#include "ecc/gateway.hpp"
#include "ecc/simharness.hpp"
#include "ecc/text.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <unordered_set>

#ifndef ECC_DATA_DIR
#define ECC_DATA_DIR "data"
#endif

namespace ecc {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string plural(std::size_t n, const std::string& word) {
    if (n == 1) return "1 " + word;
    return std::to_string(n) + " " + word + (word.ends_with("ch") ? "es" : "s");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!clean_text(line).empty()) lines.push_back(line);
    }
    return lines;
}

std::filesystem::path resolve_fixture(const std::string& name) {
    if (name == "table5") return data_dir() / "table5.tsv";
    return name;
}

void print_winners(std::ostream& out, const std::vector<RowWinners>& rows) {
    for (const auto& row : rows) {
        out << row.input << '\t' << format_fixed(row.score, 3) << '\t';
        for (std::size_t i = 0; i < row.winners.size(); ++i) out << (i ? ", " : "") << row.winners[i];
        out << '\n';
    }
}

std::atomic<GatewayServer*> g_server{nullptr};

void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

}  // namespace

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("ECC_DATA_DIR"); env && *env) return env;
    return ECC_DATA_DIR;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"End-cloud collaboration runtime", "ecc"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Config file (default: $ECC_CONFIG, else built-in defaults)");
    app.add_option("--seed", seed, "Seed for every random choice; overrides the config");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the gateway HTTP API");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Corpus file to session/response pairs");
    std::string corpus_path;
    std::string corpus_format = "jsonl_generic";
    std::optional<std::string> pairs_out;
    ingest->add_option("corpus", corpus_path)->required();
    ingest->add_option("--format", corpus_format, "ecd, jddc or jsonl_generic");
    ingest->add_option("--out", pairs_out, "Pair export file");

    // gen-dataset
    auto* gen = app.add_subcommand("gen-dataset", "Ask the cloud backend to answer every pair's question");
    std::string gen_pairs;
    std::string gen_out;
    gen->add_option("--pairs", gen_pairs)->required();
    gen->add_option("--out", gen_out)->required();

    // eval-grid
    auto* grid = app.add_subcommand("eval-grid", "Analyze a score grid or score end variants against the cloud");
    std::optional<std::string> grid_fixture;
    std::optional<std::string> grid_inputs;
    std::vector<std::string> grid_variants;
    std::optional<std::string> grid_out;
    std::string grid_format = "table";
    grid->add_option("--fixture", grid_fixture, "'table5' or a grid file to analyze");
    grid->add_option("--inputs", grid_inputs, "One user input per line");
    grid->add_option("--variant", grid_variants, "label=replay-fixture, repeatable");
    grid->add_option("--out", grid_out, "Write the grid as TSV");
    grid->add_option("--format", grid_format, "table or json")->check(CLI::IsMember({"table", "json"}));

    // simulate
    auto* sim = app.add_subcommand("simulate", "Replay pairs through the full loop");
    std::string sim_pairs;
    std::optional<std::string> sim_scores;
    std::string sim_log;
    std::optional<std::string> sim_out;
    std::string sim_format = "table";
    sim->add_option("--pairs", sim_pairs)->required();
    sim->add_option("--scores", sim_scores, "Score script pinning (sim, rel_end, rel_cloud) per query");
    sim->add_option("--log", sim_log, "Event log to write; must not exist yet")->required();
    sim->add_option("--out", sim_out, "Write the report as JSON");
    sim->add_option("--format", sim_format, "table or json")->check(CLI::IsMember({"table", "json"}));

    // flush-queue
    auto* flush = app.add_subcommand("flush-queue", "Drain queued training examples to the trainer");
    std::optional<std::int64_t> batch_size;
    flush->add_option("--batch-size", batch_size)->check(CLI::PositiveNumber);

    // validate-config
    auto* validate = app.add_subcommand("validate-config", "Check a config file");
    std::string validate_format = "summary";
    validate->add_option("--format", validate_format, "summary or config")
        ->check(CLI::IsMember({"summary", "config"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    EccConfig cfg;
    try {
        if (auto path = resolve_config_path(config_path ? std::optional<std::filesystem::path>(*config_path)
                                                        : std::nullopt)) {
            cfg = load_config(*path);
        }
        if (seed) cfg.seed = *seed;
    } catch (const ConfigError& e) {
        err << "config invalid: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*validate) {
            if (validate_format == "config") {
                out << serialize_config(cfg);
            } else {
                out << "config ok: alpha=" << cfg.eval.alpha << " theta=" << cfg.eval.theta << " tau=" << cfg.eval.tau
                    << " end=" << cfg.end_backend.model_name << " cloud=" << cfg.cloud_backend.model_name << "\n";
            }
            return 0;
        }

        if (*ingest) {
            const auto format = parse_corpus_format(corpus_format);
            if (!format) throw UsageError("unknown corpus format '" + corpus_format + "'");
            std::vector<SessionResponsePair> pairs;
            const CorpusStats stats = ingest_corpus(corpus_path, *format, [&](DialogueSession&& s) {
                auto flat = flatten_session(s);
                pairs.insert(pairs.end(), flat.begin(), flat.end());
            });
            out << plural(stats.sessions, "session") << ", " << plural(stats.pairs, "pair") << "\n";
            for (const auto& [reason, n] : stats.dropped_by_reason) out << "dropped " << reason << ": " << n << "\n";
            if (pairs_out) write_pairs(*pairs_out, pairs);
            return 0;
        }

        if (*gen) {
            const auto pairs = read_pairs(gen_pairs);
            GatewayDeps deps = make_gateway_deps(cfg);
            std::string lines;
            std::unordered_set<std::uint64_t> seen;
            std::size_t written = 0;
            std::size_t skipped = 0;
            for (const auto& pair : pairs) {
                const std::string query = clean_text(pair.last_customer_text());
                const std::string output =
                    clean_text(escalate(query, *deps.cloud, deps.prompt, cfg.generation).text);
                if (output.empty() || !seen.insert(example_key(query, output)).second) {
                    ++skipped;
                    continue;
                }
                TrainingExample ex{query, output, ExampleOrigin::cloud_pseudo_label, pair.pair_id, 0};
                lines += example_to_export_line(ex) + "\n";
                ++written;
            }
            write_text(gen_out, lines);
            out << plural(written, "example") << " written, " << skipped << " skipped\n";
            return 0;
        }

        if (*grid) {
            GridReport report;
            if (grid_fixture) {
                if (grid_inputs || !grid_variants.empty()) {
                    throw UsageError("--fixture analyzes an existing grid; drop --inputs/--variant");
                }
                report = load_grid(resolve_fixture(*grid_fixture));
            } else {
                if (!grid_inputs || grid_variants.empty()) {
                    throw UsageError("eval-grid needs --fixture, or --inputs with at least one --variant");
                }
                GatewayDeps deps = make_gateway_deps(cfg);
                std::vector<GridVariant> variants;
                for (const auto& spec : grid_variants) {
                    const auto eq = spec.find('=');
                    if (eq == std::string::npos || eq == 0) throw UsageError("--variant expects label=fixture");
                    const std::string label = spec.substr(0, eq);
                    variants.push_back({label, ReplayBackend::from_file(spec.substr(eq + 1), label)});
                }
                report = eval_grid(read_lines(*grid_inputs), variants, *deps.cloud, deps.prompt, cfg.eval,
                                   cfg.generation, {deps.similarity, deps.relevance});
            }
            if (grid_out) write_text(*grid_out, report.to_tsv());
            if (grid_format == "json") {
                out << report.to_json().dump(2) << "\n";
            } else {
                print_winners(out, analyze_published_grid(report));
            }
            return 0;
        }

        if (*sim) {
            cfg.log_path = sim_log;
            const auto pairs = read_pairs(sim_pairs);
            std::optional<ScorerPair> scorers;
            if (sim_scores) {
                auto end = ReplayBackend::from_file(cfg.end_backend.fixture_path.value_or(""), cfg.end_backend.model_name);
                auto cloud =
                    ReplayBackend::from_file(cfg.cloud_backend.fixture_path.value_or(""), cfg.cloud_backend.model_name);
                scorers = scripted_scorers(load_score_script(*sim_scores), *end, *cloud);
            }
            const SimulationRun run = replay_simulation(pairs, cfg, scorers);
            if (!(run.live == run.replay.metrics)) throw std::runtime_error("live metrics disagree with the event log");
            if (sim_out) write_text(*sim_out, run.report.to_json().dump(2) + "\n");
            if (sim_format == "json") {
                out << run.report.to_json().dump(2) << "\n";
            } else {
                out << run.report.to_table();
            }
            return 0;
        }

        if (*flush) {
            const auto batch = static_cast<std::size_t>(batch_size.value_or(cfg.queue_batch_size));
            Gateway gateway(cfg, make_gateway_deps(cfg));
            std::size_t batches = 0;
            std::size_t examples = 0;
            while (gateway.queue_depth() > 0) {
                const DrainResult r = gateway.flush(batch);
                if (r.dispatched() == 0) break;
                ++batches;
                examples += r.dispatched();
                out << "job " << r.job_id << ": " << plural(r.dispatched(), "example") << "\n";
            }
            out << "dispatched " << plural(examples, "example") << " in " << plural(batches, "batch") << "\n";
            return 0;
        }

        if (*serve) {
            Gateway gateway(cfg, make_gateway_deps(cfg));
            GatewayServer server(gateway);
            const int bound = server.bind(host, port);
            if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
            out << "listening on http://" << host << ":" << bound << "\n" << std::flush;
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.serve();
            g_server = nullptr;
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        err << "config invalid: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace ecc
