#pragma once

#include <cstdint>

namespace ioi {

// splitmix64: tiny, seedable, identical output on every platform. Used for all
// randomness (fixtures, kernels, crop offsets) so runs reproduce bit-for-bit;
// std::uniform_real_distribution is not portable across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo,hi).
    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform integer in [0,n).
    uint64_t below(uint64_t n) { return n ? next_u64() % n : 0; }

private:
    uint64_t state_;
};

// Deterministic per-item seed from a master seed and an item index.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    Rng r(master ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
    return r.next_u64();
}

}  // namespace ioi
