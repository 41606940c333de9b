#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "riskquant/normal.hpp"

namespace riskquant {

// splitmix64 output mix; also used to derive independent stream seeds.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive the seed of an independent substream. Used for the fixed stream
/// tags (init/shuffle/data/alpha) and for per-row counter streams, so any
/// row or node can be regenerated in isolation.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64_mix(seed ^ splitmix64_mix(tag));
}

/// Small counter-based generator. Deterministic per (seed), cheap to split.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform draw in the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via inverse-CDF; keeps every stream reproducible
    /// independent of library distribution internals.
    double normal() { return norm_quantile(uniform01()); }

    /// Child generator for counter `index`; independent of this stream.
    Rng split(std::uint64_t index) const { return Rng(derive_stream(state_, index)); }

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = next_u64() % i;
            std::swap(idx[i - 1], idx[j]);
        }
        return idx;
    }

private:
    std::uint64_t state_;
};

// Fixed stream tags so experiment seeds expand the same way everywhere.
namespace stream {
constexpr std::uint64_t kInit = 0x1;
constexpr std::uint64_t kShuffle = 0x2;
constexpr std::uint64_t kData = 0x3;
constexpr std::uint64_t kAlpha = 0x4;
constexpr std::uint64_t kEval = 0x5;
}  // namespace stream

}  // namespace riskquant
