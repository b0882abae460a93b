#pragma once

// Counter-based random number generation.
//
// Every random draw in this library is a pure function of a 64-bit stream key and a
// 128-bit counter, so any draw can be reproduced in isolation and work can be
// distributed across threads without changing a single bit of output. The generator
// family and the derivation of keys are part of the public interface (see README):
//
//   * block generator: Philox4x32 with 10 rounds (key = 64-bit seed, counter = 128-bit),
//   * seed derivation: derive_seed(parent, index) = mix64(parent ^ mix64(index)) where
//     mix64 is the splitmix64 finalizer,
//   * uniforms: 53-bit mantissa scaling, u = (bits64 >> 11) * 2^-53 in [0, 1),
//   * gaussians: Box-Muller on one Philox block (two doubles per counter), pinned
//     explicitly instead of std::normal_distribution (which is implementation-defined).

#include <cmath>
#include <cstdint>
#include <numbers>

namespace randlik::rng {

// splitmix64 finalizer: the fixed 64-bit mixing function used for seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Child stream key for (parent seed, index), e.g. sweep point -> realization.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(parent ^ mix64(index));
}

struct Block {
    std::uint32_t x[4];
};

// Philox4x32-10: 10 rounds of the Philox S-P network over a 128-bit counter with a
// 64-bit key. Constants are the published multipliers/Weyl increments; the unit tests
// pin the published known-answer vectors.
inline Block philox4x32(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);

    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return Block{{c0, c1, c2, c3}};
}

// 64 random bits for (key, counter); low half of the Philox block.
inline std::uint64_t bits64(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) noexcept {
    const Block b = philox4x32(key, ctr_hi, ctr_lo);
    return (static_cast<std::uint64_t>(b.x[1]) << 32) | b.x[0];
}

// Uniform double in [0, 1).
inline double uniform01(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) noexcept {
    return static_cast<double>(bits64(key, ctr_hi, ctr_lo) >> 11) * 0x1.0p-53;
}

struct GaussPair {
    double z0;
    double z1;
};

// Two independent standard normals from one Philox block via Box-Muller.
// u1 lies in (0, 1] so the logarithm is always finite.
inline GaussPair gaussian_pair(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) noexcept {
    const Block b = philox4x32(key, ctr_hi, ctr_lo);
    const std::uint64_t w0 = (static_cast<std::uint64_t>(b.x[1]) << 32) | b.x[0];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(b.x[3]) << 32) | b.x[2];
    const double u1 = (static_cast<double>(w0 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return GaussPair{r * std::cos(a), r * std::sin(a)};
}

// Single standard normal for (key, counter); first element of the pair.
inline double gaussian(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) noexcept {
    return gaussian_pair(key, ctr_hi, ctr_lo).z0;
}

}  // namespace randlik::rng
