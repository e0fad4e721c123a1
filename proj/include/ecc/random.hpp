#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ecc {

// std::uniform_int_distribution and std::shuffle are implementation-defined;
// everything seeded in this project goes through these helpers so fixtures
// pinned on one platform reproduce on every other.

using Engine = std::mt19937_64;

/// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound);

/// Uniform real in [0, 1) built from the top 53 bits of one draw.
double uniform_unit(Engine& engine);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

/// Selection sampling: k distinct indices from 0..n-1 in increasing order.
std::vector<std::size_t> sample_sorted(std::size_t n, std::size_t k, std::uint64_t seed);

/// Stateless mixer (SplitMix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

}  // namespace ecc
