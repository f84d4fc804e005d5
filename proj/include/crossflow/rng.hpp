#pragma once

#include <cstdint>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace crossflow {

/// SplitMix64 mixing step. Used to derive independent sub-seeds so that
/// parallel units (runs, trees, repetitions) get decorrelated streams
/// regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic sub-seed from a base seed and up to three stream tags.
/// derive_seed(s, a) != derive_seed(s, a, b) in general; tags are mixed in
/// order, so (seed, run), (seed, rep), (seed, dest, tree) all give
/// independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ (b + 0xbf58476d1ce4e5b9ULL));
    h = splitmix64(h ^ (c + 0x94d049bb133111ebULL));
    return h;
}

using RngEngine = std::mt19937_64;

inline RngEngine make_rng(std::uint64_t seed) { return RngEngine(seed); }

/// Uniform integer in [0, n) via Lemire's multiply-shift. Unlike
/// std::uniform_int_distribution this is pinned to one algorithm, so seeded
/// results do not depend on the standard library implementation.
inline std::uint64_t bounded_uint(RngEngine& rng, std::uint64_t n) {
    using u128 = unsigned __int128;
    u128 m = static_cast<u128>(rng()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (lo < threshold) {
            m = static_cast<u128>(rng()) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

/// In-place Fisher-Yates shuffle driven by bounded_uint (implementation-pinned,
/// unlike std::shuffle).
template <class T>
void deterministic_shuffle(std::vector<T>& v, RngEngine& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(bounded_uint(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace crossflow
