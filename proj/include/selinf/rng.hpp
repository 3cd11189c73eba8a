#pragma once

#include <cmath>
#include <cstdint>

// Counter-keyed random streams for the simulation harness. Standard-library
// distributions are avoided on purpose: their value sequences differ across
// implementations, and the reports promise bit-identical reruns.

namespace selinf {

/// SplitMix64: tiny, fast, passes BigCrush; one instance per simulation
/// iteration so parallel scheduling cannot reorder draws.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform draw strictly inside (0, 1): 53 random bits plus a half-ulp
    /// offset, so log(u) below is always finite.
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    /// Standard normal via Box-Muller; consumes exactly two uniforms per
    /// call, which keeps the draw count easy to reason about.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

/// Decorrelated per-iteration seed derived from the master seed and the
/// iteration index; two scramble rounds keep neighboring indices unrelated.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 g(master ^ (index * 0x9e3779b97f4a7c15ull) ^ 0xd1b54a32d192ed03ull);
    g.next();
    return g.next();
}

}  // namespace selinf
