#pragma once

#include <cstdint>
#include <random>

namespace tsplit {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of replication r in an experiment: base ^ splitmix(r).
constexpr std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) noexcept {
    return base ^ splitmix64(r);
}

/// Child stream `index` of `seed`. Nonlinear in both arguments, so nested
/// derivations do not collide the way plain xor-mixing would.
constexpr std::uint64_t substream(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(~index));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

}  // namespace tsplit
