#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace critiq {

namespace detail {

// SplitMix64 finalizer; used to derive well-separated child seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Independent seed for a tagged sub-experiment of a run (one tag per load
// point, per series estimator, ...). Streams under different derived seeds
// never collide with the parent run's streams in practice.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::splitmix64(detail::splitmix64(seed) + detail::splitmix64(tag ^ 0xc2b2ae3d27d4eb4fULL));
}

// One deterministic random stream. Replication k of a run seeded with s draws
// from RngStream::substream(s, k); streams with distinct (seed, index) pairs
// are independent for practical purposes, and a given pair always reproduces
// the same sequence.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : gen_(detail::splitmix64(seed)) {}

    static RngStream substream(std::uint64_t seed, std::uint64_t index) {
        return RngStream(detail::splitmix64(seed) ^ detail::splitmix64(~index));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on the open interval (0,1); safe to pass through log().
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace critiq
