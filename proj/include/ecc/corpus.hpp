#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecc {

enum class Role { customer, agent };
enum class CorpusSource { ecd, jddc, generated, live };
enum class CorpusFormat { ecd, jddc, jsonl_generic };

std::string to_string(Role role);
std::optional<Role> parse_role(std::string_view text);
std::string to_string(CorpusSource source);
std::optional<CorpusSource> parse_corpus_source(std::string_view text);
std::optional<CorpusFormat> parse_corpus_format(std::string_view text);

struct Turn {
    Role role = Role::customer;
    std::string text;
    std::size_t index = 0;

    bool operator==(const Turn&) const = default;
};

/// After ingestion: nonempty, roles alternate starting with a customer turn,
/// every text cleaned and nonempty, indices strictly increasing.
struct DialogueSession {
    std::string session_id;
    std::vector<Turn> turns;
    CorpusSource source = CorpusSource::generated;
};

/// A context ending in a customer turn plus the agent reply that followed.
struct SessionResponsePair {
    std::vector<Turn> context;
    std::string response;
    std::string pair_id;

    const std::string& last_customer_text() const { return context.back().text; }

    bool operator==(const SessionResponsePair&) const = default;
};

struct CorpusStats {
    std::size_t sessions = 0;
    std::size_t pairs = 0;
    std::size_t dropped = 0;
    std::map<std::string, std::size_t> dropped_by_reason;
    double mean_turns_per_session = 0.0;
};

class CorpusError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Streams sessions to `sink` in file order. Malformed records are counted in
/// the returned stats and never emitted. Throws CorpusError if the file cannot
/// be read.
CorpusStats ingest_corpus(const std::filesystem::path& path, CorpusFormat format,
                          const std::function<void(DialogueSession&&)>& sink);

struct IngestResult {
    std::vector<DialogueSession> sessions;
    CorpusStats stats;
};

IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Merges consecutive same-role turns, drops leading agent turns and renumbers.
/// Texts are expected to be cleaned already.
std::vector<Turn> normalize_turns(const std::vector<Turn>& turns);

/// One pair per agent turn (after merging consecutive same-role turns); the
/// context is every turn before it.
std::vector<SessionResponsePair> flatten_session(const DialogueSession& session);

struct SplitRatios {
    double train = 0.8;
    double valid = 0.1;
    double test = 0.1;
};

struct CorpusSplit {
    std::vector<SessionResponsePair> train;
    std::vector<SessionResponsePair> valid;
    std::vector<SessionResponsePair> test;
};

/// Largest-remainder share sizes for n items (ties go to the earlier split).
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// Seeded disjoint partition; each part keeps the input order of its members.
CorpusSplit split_corpus(const std::vector<SessionResponsePair>& pairs, const SplitRatios& ratios,
                         std::uint64_t seed);

// Pair export: one JSON object per line {"pair_id", "context": [...], "response"}.
std::string pair_to_json_line(const SessionResponsePair& pair);
SessionResponsePair pair_from_json_line(std::string_view line);
void write_pairs(const std::filesystem::path& path, const std::vector<SessionResponsePair>& pairs);
std::vector<SessionResponsePair> read_pairs(const std::filesystem::path& path);

}  // namespace ecc
