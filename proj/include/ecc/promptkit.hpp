#pragma once

#include "ecc/config.hpp"
#include "ecc/corpus.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecc {

/// Universal chat shape sent to every backend.
struct ChatMessage {
    std::string role;  // "system", "user" or "assistant"
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct FewShotExample {
    std::string question;
    std::string answer;

    bool operator==(const FewShotExample&) const = default;
};

/// Role instruction that turns a general-purpose model into an e-commerce agent.
extern const char* const kDefaultPreamble;
extern const char* const kExamplesHeader;
extern const char* const kQuestionPrefix;
extern const char* const kAnswerPrefix;

struct PromptTemplate {
    std::string preamble = kDefaultPreamble;
    std::vector<FewShotExample> examples;
    std::vector<std::string> source_pair_ids;

    std::size_t n() const { return examples.size(); }
};

class PromptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Samples n pairs uniformly without replacement (input order kept). Each
/// pair's final customer turn becomes the question and its response the answer.
PromptTemplate build_fewshot_prompt(const std::vector<SessionResponsePair>& pairs, std::size_t n,
                                    std::uint64_t seed, std::string preamble = kDefaultPreamble);

struct RenderedPrompt {
    std::vector<ChatMessage> messages;
    std::size_t rendered_examples = 0;
};

/// System message with the preamble and the enumerated examples, then the user
/// message. When the system text is longer than limits.max_length characters,
/// whole examples are evicted from the front until it fits.
RenderedPrompt render_messages(const PromptTemplate& tmpl, std::string_view user_query,
                               const GenerationParams& limits);

}  // namespace ecc
