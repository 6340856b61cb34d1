#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers: every draw is a pure function of
// (key, stream, counter), so particles, samples and replicas get
// independent streams whose values do not depend on evaluation order.

namespace chaoslab::rng {

// SplitMix64 finalizer (bijective, good avalanche).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash3(std::uint64_t key, std::uint64_t stream,
                              std::uint64_t ctr) noexcept {
    return mix64(mix64(mix64(key) ^ stream) ^ ctr);
}

// Derived keys so that distinct uses of the same user seed never share a
// counter space.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t purpose) noexcept {
    return mix64(seed ^ mix64(purpose));
}

inline constexpr std::uint64_t kPurposeSampling = 0x53414d504cull;  // initial-data draws
inline constexpr std::uint64_t kPurposeNoise    = 0x4e4f495345ull;  // Wiener increments
inline constexpr std::uint64_t kPurposeMc       = 0x4d43ull;        // Monte-Carlo samples
inline constexpr std::uint64_t kPurposeReplica  = 0x5245504cull;    // per-replica seeds

// Uniform in the open interval (0,1); never returns 0 or 1.
inline double u01(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

inline double uniform(std::uint64_t key, std::uint64_t stream, std::uint64_t ctr) noexcept {
    return u01(hash3(key, stream, ctr));
}

// One standard normal per (key, stream, ctr) via Box-Muller.  Consumes the
// hash counters {2*ctr, 2*ctr+1}; callers interleaving uniform() draws on
// the same stream must keep the counter spaces disjoint.
inline double normal(std::uint64_t key, std::uint64_t stream, std::uint64_t ctr) noexcept {
    const double u1 = u01(hash3(key, stream, 2 * ctr));
    const double u2 = u01(hash3(key, stream, 2 * ctr + 1));
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.28318530717958647692528676655900577 * u2);
}

}  // namespace chaoslab::rng
