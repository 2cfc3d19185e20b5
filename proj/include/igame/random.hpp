#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace igame {

/// SplitMix64 finaliser (Steele, Lea, Flood 2014).
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw i of substream s under seed k is
/// splitmix64(key(k, s) + i * golden). Any draw can be produced without
/// generating its predecessors, so per-path streams are independent of the
/// order in which paths are simulated.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t substream)
        : key_(splitmix64(seed ^ splitmix64(substream + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return splitmix64(key_ + counter * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on counters (2j, 2j+1); `second`
    /// selects the sine branch.
    double normal(std::uint64_t pair, bool second) const {
        const double u1 = uniform(2 * pair);
        const double u2 = uniform(2 * pair + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return second ? r * std::sin(a) : r * std::cos(a);
    }

private:
    std::uint64_t key_;
};

/// Radical inverse of `index` in `base` (Halton coordinate).
inline double radical_inverse(std::uint64_t index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Halton coordinate `axis` of point `index`, shifted modulo 1 by a
/// seed-dependent rotation (Cranley-Patterson).
inline double halton(std::uint64_t index, unsigned axis, std::uint64_t seed) {
    static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    const unsigned base = primes[axis % 12];
    const double shift = static_cast<double>(splitmix64(seed * 31 + axis) >> 11) * 0x1.0p-53;
    double v = radical_inverse(index + 1, base) + shift;
    return v - std::floor(v);
}

}  // namespace igame
