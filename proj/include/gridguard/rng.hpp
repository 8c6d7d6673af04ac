#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace gridguard {

/// SplitMix64 step. Used to expand a single 64-bit seed into generator state
/// and to derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a seed with a tag so that every (seed, tag) pair gives an unrelated
/// stream. Stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded through SplitMix64.
/// Bitwise reproducible on every platform; satisfies UniformRandomBitGenerator
/// but callers should prefer the member draws, which do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return next(); }

    std::uint64_t next();
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (no cached second value).
    double normal();

    /// Fisher-Yates shuffle driven by below().
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t s_[4];
};

}  // namespace gridguard
