// Deterministic RNG used everywhere in avex. All randomness flows from an
// explicit 64-bit seed; no ambient entropy, no std distributions (their output
// is implementation-defined). SplitMix64 core, Lemire bounded ints, Box-Muller
// normals. Streams for independent objects are derived with mix().
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace avex {

inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash-combine for deriving per-object substreams, e.g. mix(seed, product_id).
inline uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64_next(s);
}

inline uint64_t mix(uint64_t a, uint64_t b, uint64_t c) { return mix(mix(a, b), c); }

class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // decorrelate trivially related seeds (0, 1, 2, ...)
        (void)next_u64();
    }

    uint64_t next_u64() { return splitmix64_next(state_); }

    // uniform in [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform integer in [0, n), unbiased (Lemire rejection)
    int uniform_int(int n) {
        const uint64_t bound = static_cast<uint64_t>(n);
        while (true) {
            uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * bound;
            uint64_t lo = static_cast<uint64_t>(m);
            if (lo >= bound || lo >= (-bound) % bound) {
                return static_cast<int>(static_cast<uint64_t>(m >> 64));
            }
        }
    }

    // standard normal via Box-Muller (no cached spare, keeps state minimal)
    double normal() {
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[i], v[static_cast<size_t>(j)]);
        }
    }

    // first `count` entries of a uniform random permutation of v (partial Fisher-Yates)
    template <typename T>
    void partial_shuffle(std::vector<T>& v, int count) {
        const int n = static_cast<int>(v.size());
        for (int i = 0; i < count && i < n - 1; ++i) {
            int j = i + uniform_int(n - i);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

  private:
    uint64_t state_;
};

}  // namespace avex
