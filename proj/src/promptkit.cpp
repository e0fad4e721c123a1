#include "ecc/promptkit.hpp"

#include "ecc/random.hpp"
#include "ecc/text.hpp"

namespace ecc {

const char* const kDefaultPreamble =
    "Assuming that you are an e-commerce customer service agent who is able to answer the specialized knowledge "
    "in e-commerce, has good service consciousness, and is able to deal with the customer's request properly, you "
    "are asked to play the role of an e-commerce customer service agent in order to deal with the customers in the "
    "following.";
const char* const kExamplesHeader = "Here are some examples for your reference.";
const char* const kQuestionPrefix = "Customer: ";
const char* const kAnswerPrefix = "Customer Service: ";

PromptTemplate build_fewshot_prompt(const std::vector<SessionResponsePair>& pairs, std::size_t n,
                                    std::uint64_t seed, std::string preamble) {
    if (n > pairs.size()) {
        throw PromptError("requested " + std::to_string(n) + " examples but only " + std::to_string(pairs.size()) +
                          " pairs are available");
    }
    PromptTemplate tmpl;
    tmpl.preamble = std::move(preamble);
    for (std::size_t i : sample_sorted(pairs.size(), n, seed)) {
        const auto& pair = pairs[i];
        if (pair.context.empty()) throw PromptError("pair " + pair.pair_id + " has an empty context");
        FewShotExample ex{clean_text(pair.last_customer_text()), clean_text(pair.response)};
        if (ex.question.empty() || ex.answer.empty()) {
            throw PromptError("pair " + pair.pair_id + " has empty question or answer text");
        }
        tmpl.examples.push_back(std::move(ex));
        tmpl.source_pair_ids.push_back(pair.pair_id);
    }
    return tmpl;
}

RenderedPrompt render_messages(const PromptTemplate& tmpl, std::string_view user_query,
                               const GenerationParams& limits) {
    if (clean_text(user_query).empty()) throw PromptError("user query is empty");
    const std::size_t budget = limits.max_length > 0 ? static_cast<std::size_t>(limits.max_length) : 0;

    const std::size_t preamble_len = utf8_length(tmpl.preamble);
    if (preamble_len > budget) {
        throw PromptError("preamble alone (" + std::to_string(preamble_len) + " chars) exceeds the " +
                          std::to_string(budget) + "-char budget");
    }

    // Example lines are single-line by construction of clean_text.
    std::vector<std::string> blocks;
    std::vector<std::size_t> block_len;
    blocks.reserve(tmpl.examples.size());
    for (const auto& ex : tmpl.examples) {
        std::string block = std::string("\n") + kQuestionPrefix + clean_text(ex.question) + "\n" + kAnswerPrefix +
                            clean_text(ex.answer);
        block_len.push_back(utf8_length(block));
        blocks.push_back(std::move(block));
    }
    const std::string header = std::string("\n\n") + kExamplesHeader + "\n";
    const std::size_t header_len = utf8_length(header);

    std::size_t total = 0;
    for (auto len : block_len) total += len;
    std::size_t first = 0;
    while (first < blocks.size() && preamble_len + header_len + total > budget) {
        total -= block_len[first];
        ++first;
    }

    std::string system = tmpl.preamble;
    if (first < blocks.size()) {
        system += header;
        for (std::size_t i = first; i < blocks.size(); ++i) system += blocks[i];
    }

    RenderedPrompt out;
    out.messages.push_back({"system", std::move(system)});
    out.messages.push_back({"user", std::string(user_query)});
    out.rendered_examples = blocks.size() - first;
    return out;
}

}  // namespace ecc
