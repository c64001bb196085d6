#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

// Fixed, dependency-free pseudorandom primitives. Everything here is part of
// the reproducibility contract: golden values and frozen fixtures depend on
// these exact recipes, so the constants and update rules must not change.

namespace edrmq {

/// FNV-1a 64-bit hash of a byte string.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// SplitMix64 finalizer; also used to derive stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// SplitMix64 generator (Steele, Lea, Flood 2014). One 64-bit output per step.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    /// Uniform double in (0, 1]: top 53 bits, shifted into the unit interval.
    double next_unit() noexcept {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n) via Lemire's multiply-shift reduction.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::uint64_t next_in(std::uint64_t lo, std::uint64_t hi) noexcept {
        return lo + next_below(hi - lo + 1);
    }

private:
    std::uint64_t state_;
};

/// One Box-Muller step: two unit draws -> two standard normal deviates.
/// next_unit() never returns 0, so the log is always finite.
inline std::pair<double, double> gaussian_pair(SplitMix64& g) noexcept {
    const double u1 = g.next_unit();
    const double u2 = g.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

/// In-place Fisher-Yates shuffle driven by the given stream.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(g.next_below(i));
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

} // namespace edrmq
