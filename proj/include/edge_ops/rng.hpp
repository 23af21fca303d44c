#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace edge {

// Counter-based generator: every draw is a pure function of (seed, stream, counter).

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

inline std::uint64_t counter_bits(std::uint64_t key, std::uint64_t counter) {
    return splitmix64(key ^ splitmix64(counter + 0x632be59bd9b4e019ULL));
}

/// Uniform on the open interval (0, 1).
inline double counter_uniform(std::uint64_t key, std::uint64_t counter) {
    return (static_cast<double>(counter_bits(key, counter) >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two counter slots.
inline double counter_normal(std::uint64_t key, std::uint64_t counter) {
    double u1 = counter_uniform(key, 2 * counter);
    double u2 = counter_uniform(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Stream ids reserved by the library.
namespace streams {
constexpr std::uint64_t path = 0;
constexpr std::uint64_t refine_base = 1000;  // + refinement level
constexpr std::uint64_t laguerre = 7;
}  // namespace streams

}  // namespace edge
