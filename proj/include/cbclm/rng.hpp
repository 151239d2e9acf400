// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace cbclm {

// splitmix64 (Steele et al.), used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable per-item seed for (run seed, item index) pairs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

// 53-bit uniform double in [0, 1). The standard distributions are
// implementation-defined, so draws are built from raw engine output to keep
// results identical across standard libraries.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

// Uniform index in [0, n) via the multiply-high reduction.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    using u128 = unsigned __int128;
    return static_cast<std::size_t>((u128(rng()) * u128(n)) >> 64);
}

// Single uniform [0,1) value from a derived seed without keeping an engine.
inline double unit_value_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(derive_seed(seed, index) >> 11) * 0x1.0p-53;
}

} // namespace cbclm
