#pragma once

#include <cstdint>
#include <map>
#include <string_view>

namespace ecc {

inline constexpr std::size_t kDefaultEmbeddingDims = 65536;
inline constexpr std::size_t kDefaultNgram = 2;

/// Sparse term-frequency vector over hashed character n-gram buckets.
struct EmbeddingVector {
    std::size_t dims = kDefaultEmbeddingDims;
    std::map<std::uint64_t, double> values;

    bool operator==(const EmbeddingVector&) const = default;
};

/// FNV-1a, 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);

/// Term frequencies of the character n-grams (over Unicode scalar values) of
/// clean_text(text); each n-gram's UTF-8 bytes are hashed with FNV-1a 64 and
/// reduced modulo dims. Texts shorter than n produce an empty vector.
EmbeddingVector embed(std::string_view text, std::size_t n = kDefaultNgram,
                      std::size_t dims = kDefaultEmbeddingDims);

/// Cosine of two nonnegative vectors, clamped to [0,1]; 0 if either is empty.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace ecc
