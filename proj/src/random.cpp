#include "ecc/random.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace ecc {

std::uint64_t uniform_below(Engine& engine, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = 0;
    do {
        x = engine();
    } while (x >= limit);
    return x % bound;
}

double uniform_unit(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Engine engine(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(engine, i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<std::size_t> sample_sorted(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> out;
    out.reserve(k);
    Engine engine(seed);
    std::size_t needed = k;
    for (std::size_t i = 0; i < n && needed > 0; ++i) {
        // Knuth's algorithm S: keep i with probability needed / remaining.
        const std::size_t remaining = n - i;
        if (uniform_below(engine, remaining) < needed) {
            out.push_back(i);
            --needed;
        }
    }
    return out;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace ecc
