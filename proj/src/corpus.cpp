#include "ecc/corpus.hpp"

#include "ecc/random.hpp"
#include "ecc/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ecc {

using nlohmann::json;

std::string to_string(Role role) { return role == Role::customer ? "customer" : "agent"; }

std::optional<Role> parse_role(std::string_view text) {
    if (text == "customer") return Role::customer;
    if (text == "agent") return Role::agent;
    return std::nullopt;
}

std::string to_string(CorpusSource source) {
    switch (source) {
        case CorpusSource::ecd: return "ecd";
        case CorpusSource::jddc: return "jddc";
        case CorpusSource::generated: return "generated";
        case CorpusSource::live: return "live";
    }
    return "generated";
}

std::optional<CorpusSource> parse_corpus_source(std::string_view text) {
    if (text == "ecd") return CorpusSource::ecd;
    if (text == "jddc") return CorpusSource::jddc;
    if (text == "generated") return CorpusSource::generated;
    if (text == "live") return CorpusSource::live;
    return std::nullopt;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view text) {
    if (text == "ecd") return CorpusFormat::ecd;
    if (text == "jddc") return CorpusFormat::jddc;
    if (text == "jsonl_generic") return CorpusFormat::jsonl_generic;
    return std::nullopt;
}

std::vector<Turn> normalize_turns(const std::vector<Turn>& turns) {
    std::vector<Turn> out;
    for (const auto& t : turns) {
        if (out.empty() && t.role == Role::agent) continue;
        if (!out.empty() && out.back().role == t.role) {
            out.back().text += ' ';
            out.back().text += t.text;
            continue;
        }
        out.push_back(Turn{t.role, t.text, out.size()});
    }
    return out;
}

std::vector<SessionResponsePair> flatten_session(const DialogueSession& session) {
    // Merge only; a leading agent turn has no customer context and yields nothing.
    std::vector<Turn> merged;
    for (const auto& t : session.turns) {
        if (!merged.empty() && merged.back().role == t.role) {
            merged.back().text += ' ';
            merged.back().text += t.text;
        } else {
            merged.push_back(Turn{t.role, t.text, merged.size()});
        }
    }
    std::vector<SessionResponsePair> pairs;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        if (merged[i].role != Role::agent || i == 0) continue;
        SessionResponsePair p;
        p.context.assign(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(i));
        p.response = merged[i].text;
        p.pair_id = session.session_id + "#" + std::to_string(pairs.size());
        pairs.push_back(std::move(p));
    }
    return pairs;
}

namespace {

struct Tally {
    CorpusStats stats;
    std::size_t total_turns = 0;

    void drop(const std::string& reason) {
        ++stats.dropped;
        ++stats.dropped_by_reason[reason];
    }
};

// Cleans, validates and normalizes; emits or records a drop reason.
void finish_session(DialogueSession session, Tally& tally, const std::function<void(DialogueSession&&)>& sink) {
    if (session.turns.empty()) {
        tally.drop("no_turns");
        return;
    }
    for (auto& t : session.turns) {
        t.text = clean_text(t.text);
        if (t.text.empty()) {
            tally.drop("empty_text");
            return;
        }
    }
    session.turns = normalize_turns(session.turns);
    if (session.turns.empty()) {
        tally.drop("no_customer_turn");
        return;
    }
    ++tally.stats.sessions;
    tally.total_turns += session.turns.size();
    tally.stats.pairs += flatten_session(session).size();
    sink(std::move(session));
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
        auto tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return cols;
}

void strip_line(std::string& line, std::size_t lineno) {
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

void ingest_jsonl(std::istream& in, Tally& tally, const std::function<void(DialogueSession&&)>& sink) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_line(line, lineno);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("turns") || !record["turns"].is_array()) {
            tally.drop("malformed");
            continue;
        }
        DialogueSession session;
        if (record.contains("session_id") && record["session_id"].is_string()) {
            session.session_id = record["session_id"].get<std::string>();
        } else {
            session.session_id = "line-" + std::to_string(lineno);
        }
        session.source = CorpusSource::generated;
        if (record.contains("source")) {
            auto src = record["source"].is_string() ? parse_corpus_source(record["source"].get<std::string>())
                                                    : std::nullopt;
            if (!src) {
                tally.drop("malformed");
                continue;
            }
            session.source = *src;
        }
        bool ok = true;
        std::string reason = "malformed";
        for (const auto& t : record["turns"]) {
            if (!t.is_object() || !t.contains("role") || !t.contains("text") || !t["role"].is_string() ||
                !t["text"].is_string()) {
                ok = false;
                break;
            }
            auto role = parse_role(t["role"].get<std::string>());
            if (!role) {
                ok = false;
                reason = "bad_role";
                break;
            }
            session.turns.push_back(Turn{*role, t["text"].get<std::string>(), session.turns.size()});
        }
        if (!ok) {
            tally.drop(reason);
            continue;
        }
        finish_session(std::move(session), tally, sink);
    }
}

// ECD: label \t utterance ... \t response. The response is the agent reply and
// roles alternate backwards from it; label 0 rows are negative candidates.
void ingest_ecd(std::istream& in, Tally& tally, const std::function<void(DialogueSession&&)>& sink) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_line(line, lineno);
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() < 3 || (cols[0] != "0" && cols[0] != "1")) {
            tally.drop("malformed");
            continue;
        }
        if (cols[0] == "0") {
            tally.drop("negative_sample");
            continue;
        }
        DialogueSession session;
        session.session_id = "ecd-" + std::to_string(lineno);
        session.source = CorpusSource::ecd;
        const std::size_t n = cols.size() - 1;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t from_end = n - 1 - i;
            Role role = from_end % 2 == 0 ? Role::agent : Role::customer;
            session.turns.push_back(Turn{role, cols[i + 1], i});
        }
        finish_session(std::move(session), tally, sink);
    }
}

// JDDC chat log: session_id \t user_id \t waiter_send \t is_transfer \t
// is_repeat \t sku \t content, grouped by consecutive session ids.
void ingest_jddc(std::istream& in, Tally& tally, const std::function<void(DialogueSession&&)>& sink) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<DialogueSession> current;
    while (std::getline(in, line)) {
        ++lineno;
        strip_line(line, lineno);
        if (line.empty()) continue;
        auto cols = split_tabs(line);
        if (cols.size() != 7 || cols[0].empty() || (cols[2] != "0" && cols[2] != "1")) {
            tally.drop("malformed");
            continue;
        }
        if (current && current->session_id != cols[0]) {
            finish_session(std::move(*current), tally, sink);
            current.reset();
        }
        if (!current) {
            current.emplace();
            current->session_id = cols[0];
            current->source = CorpusSource::jddc;
        }
        Role role = cols[2] == "1" ? Role::agent : Role::customer;
        current->turns.push_back(Turn{role, cols[6], current->turns.size()});
    }
    if (current) finish_session(std::move(*current), tally, sink);
}

}  // namespace

CorpusStats ingest_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const std::function<void(DialogueSession&&)>& sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot read corpus file: " + path.string());
    Tally tally;
    switch (format) {
        case CorpusFormat::jsonl_generic: ingest_jsonl(in, tally, sink); break;
        case CorpusFormat::ecd: ingest_ecd(in, tally, sink); break;
        case CorpusFormat::jddc: ingest_jddc(in, tally, sink); break;
    }
    if (tally.stats.sessions > 0) {
        tally.stats.mean_turns_per_session =
            static_cast<double>(tally.total_turns) / static_cast<double>(tally.stats.sessions);
    }
    return tally.stats;
}

IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format) {
    IngestResult result;
    result.stats = ingest_corpus(path, format, [&](DialogueSession&& s) { result.sessions.push_back(std::move(s)); });
    return result;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
    const std::array<double, 3> r{ratios.train, ratios.valid, ratios.test};
    for (double x : r) {
        if (!(x >= 0.0)) throw std::invalid_argument("split ratios must be nonnegative");
    }
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) throw std::invalid_argument("split ratios must sum to 1");

    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double share = r[i] * static_cast<double>(n);
        sizes[i] = static_cast<std::size_t>(std::floor(share));
        remainder[i] = share - std::floor(share);
        assigned += sizes[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; k = (k + 1) % 3) {
        ++sizes[order[k]];
        ++assigned;
    }
    // Floating error on exact shares can overshoot by one; take it back from the smallest remainder.
    while (assigned > n) {
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (sizes[*it] > 0) {
                --sizes[*it];
                --assigned;
                break;
            }
        }
    }
    return sizes;
}

CorpusSplit split_corpus(const std::vector<SessionResponsePair>& pairs, const SplitRatios& ratios,
                         std::uint64_t seed) {
    const auto sizes = split_sizes(pairs.size(), ratios);
    const auto perm = seeded_permutation(pairs.size(), seed);
    std::vector<int> bucket(pairs.size(), 0);
    for (std::size_t k = 0; k < perm.size(); ++k) {
        bucket[perm[k]] = k < sizes[0] ? 0 : (k < sizes[0] + sizes[1] ? 1 : 2);
    }
    CorpusSplit split;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& dest = bucket[i] == 0 ? split.train : (bucket[i] == 1 ? split.valid : split.test);
        dest.push_back(pairs[i]);
    }
    return split;
}

std::string pair_to_json_line(const SessionResponsePair& pair) {
    json context = json::array();
    for (const auto& t : pair.context) context.push_back(t.text);
    json j = {{"pair_id", pair.pair_id}, {"context", context}, {"response", pair.response}};
    return j.dump();
}

SessionResponsePair pair_from_json_line(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw CorpusError("pair line is not a JSON object");
    if (!j.contains("context") || !j["context"].is_array() || j["context"].empty() || !j.contains("response") ||
        !j["response"].is_string()) {
        throw CorpusError("pair line lacks a nonempty context or a response");
    }
    SessionResponsePair p;
    p.pair_id = j.value("pair_id", std::string{});
    p.response = j["response"].get<std::string>();
    const std::size_t n = j["context"].size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!j["context"][i].is_string()) throw CorpusError("pair context entries must be strings");
        // Contexts alternate and end with the customer.
        Role role = (n - 1 - i) % 2 == 0 ? Role::customer : Role::agent;
        p.context.push_back(Turn{role, j["context"][i].get<std::string>(), i});
    }
    return p;
}

void write_pairs(const std::filesystem::path& path, const std::vector<SessionResponsePair>& pairs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CorpusError("cannot write pair file: " + path.string());
    for (const auto& p : pairs) out << pair_to_json_line(p) << '\n';
    if (!out) throw CorpusError("write failed: " + path.string());
}

std::vector<SessionResponsePair> read_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot read pair file: " + path.string());
    std::vector<SessionResponsePair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_line(line, lineno);
        if (line.empty()) continue;
        try {
            pairs.push_back(pair_from_json_line(line));
        } catch (const CorpusError& e) {
            throw CorpusError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

}  // namespace ecc
