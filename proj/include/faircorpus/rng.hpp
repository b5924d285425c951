#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace faircorpus {

// Deterministic random number generation used everywhere randomness is
// needed (splits, bootstraps, feature sampling). We fix the generator to
// xoshiro256** seeded through splitmix64 so that identical seeds produce
// identical results on every platform and compiler. Standard-library
// distributions are deliberately avoided: their output is
// implementation-defined.

struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

class Rng {
public:
    using result_type = uint64_t;

    explicit Rng(uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) s = sm.next();
    }

    static constexpr uint64_t min() { return 0; }
    static constexpr uint64_t max() { return ~0ULL; }

    uint64_t operator()() { return next(); }

    uint64_t next() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n) via rejection sampling.
    uint64_t bounded(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t threshold = (~n + 1) % n; // 2^64 mod n
        for (;;) {
            const uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller on two uniforms.
    double normal() {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_;
};

// FNV-1a over bytes; used to fold strings into seed material.
inline uint64_t hash_bytes(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Derive a child seed from a base seed and a label, e.g. one seed per
// benchmark cell or per tree in a forest. Mixing through splitmix64
// decorrelates nearby inputs.
inline uint64_t derive_seed(uint64_t base, std::string_view label) {
    SplitMix64 sm(base ^ hash_bytes(label));
    return sm.next();
}

inline uint64_t derive_seed(uint64_t base, uint64_t index) {
    SplitMix64 sm(base);
    uint64_t h = sm.next();
    SplitMix64 sm2(h ^ (index * 0x9e3779b97f4a7c15ULL));
    return sm2.next();
}

} // namespace faircorpus
