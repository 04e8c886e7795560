#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace sparsecity {

/// Counter-based generator: every draw is a pure function of
/// (key, stream, counter), so any subsequence can be regenerated
/// independently and results do not depend on draw order or platform.
///
/// The mixing function is the SplitMix64 finalizer. Bump `version` if the
/// mapping ever changes; manifests record it.
class CounterRng {
public:
    static constexpr std::string_view name = "splitmix64-counter";
    static constexpr int version = 1;

    constexpr CounterRng(std::uint64_t key, std::uint64_t stream = 0) noexcept
        : key_(key), stream_(stream) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix(mix(key_ ^ mix(stream_ + 0x632be59bd9b4e019ULL)) + counter);
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). Multiply-shift; bias is below 2^-64 * bound.
    constexpr std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(bits(counter)) * bound) >> 64);
    }

    /// Standard normal via Box-Muller on counters 2c and 2c+1.
    double normal(std::uint64_t counter) const noexcept {
        const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr int sign(std::uint64_t counter) const noexcept {
        return (bits(counter) >> 63) ? -1 : 1;
    }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t stream() const noexcept { return stream_; }

private:
    std::uint64_t key_;
    std::uint64_t stream_;
};

/// Derives a child seed from a parent seed and a tuple of indices, e.g.
/// (master, s, trial) for per-cell seeds in experiment grids.
template <typename... Ints>
constexpr std::uint64_t derive_seed(std::uint64_t parent, Ints... indices) noexcept {
    std::uint64_t h = CounterRng::mix(parent ^ 0x5eed5eed5eed5eedULL);
    ((h = CounterRng::mix(h ^ static_cast<std::uint64_t>(indices))), ...);
    return h;
}

/// Uniform random permutation of 0..n-1 (Fisher-Yates driven by counters).
inline std::vector<std::size_t> random_permutation(std::size_t n, const CounterRng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i, i));
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

/// Uniform random subset of size k from 0..n-1, returned sorted.
inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, const CounterRng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = 0; i < k && i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(i, n - i));
        std::swap(p[i], p[j]);
    }
    p.resize(std::min(k, n));
    std::sort(p.begin(), p.end());
    return p;
}

}  // namespace sparsecity
