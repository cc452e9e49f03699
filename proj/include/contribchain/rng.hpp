#pragma once

#include <cstdint>
#include <random>

#include "contribchain/address.hpp"

namespace contribchain {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard; the distribution helpers below are hand-rolled because the
/// standard distributions are not, and replay equality across toolchains
/// is part of the protocol contract.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : engine_(detail::splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw from [0, n). Rejection sampling keeps it unbiased.
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0)
            throw std::invalid_argument("bounded: n must be positive");
        const std::uint64_t threshold = (0 - n) % n; // 2^64 mod n
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold)
                return r % n;
        }
    }

    /// Uniform draw from [0, 1) with 53 bits of precision.
    double unit_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    Address address() {
        Address a;
        for (auto& limb : a.limbs)
            limb = next_u64();
        return a;
    }

    /// Derives an independent stream seed from (seed, tag, a, b). Streams
    /// for distinct purposes (identity draws, vote draws, selection draws)
    /// must not share state or reordering one consumer would perturb another.
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t tag,
                                          std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t x = detail::splitmix64(seed ^ tag);
        x = detail::splitmix64(x ^ a);
        return detail::splitmix64(x ^ b);
    }

private:
    std::mt19937_64 engine_;
};

// Stream tags for DetRng::derive.
namespace rng_tag {
inline constexpr std::uint64_t identity = 0x49444e54ULL;   // per-epoch identities
inline constexpr std::uint64_t votes = 0x564f5445ULL;      // consensus behavior draws
inline constexpr std::uint64_t nacv = 0x4e414356ULL;       // NACV candidate selection
inline constexpr std::uint64_t synth = 0x53594e54ULL;      // synthetic workloads
} // namespace rng_tag

} // namespace contribchain
