#include "ecc/embedding.hpp"

#include "ecc/text.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecc {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

EmbeddingVector embed(std::string_view text, std::size_t n, std::size_t dims) {
    if (n == 0 || dims == 0) throw std::invalid_argument("embed: n and dims must be >= 1");
    EmbeddingVector v;
    v.dims = dims;
    const std::u32string cps = utf8_to_u32(clean_text(text));
    if (cps.size() < n) return v;
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
        const std::string gram = u32_to_utf8(std::u32string_view(cps).substr(i, n));
        v.values[fnv1a64(gram) % dims] += 1.0;
    }
    return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.values.empty() || b.values.empty()) return 0.0;
    double dot = 0.0;
    auto ia = a.values.begin();
    auto ib = b.values.begin();
    while (ia != a.values.end() && ib != b.values.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [_, w] : a.values) na += w * w;
    for (const auto& [_, w] : b.values) nb += w * w;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

}  // namespace ecc
