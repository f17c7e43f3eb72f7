#pragma once

#include <cstdint>

namespace mgif {

// Counter-based 64-bit generator. Output i is a pure function of
// (key, i): splitmix64 finalizer applied to key + i * golden gamma.
// Integer-only, so streams are bit-identical across platforms and
// independent of call batching. Every seeded component of the toolkit
// draws from one of these; platform RNGs are never used.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)))) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(key_ + counter_);
    }

    // Uniform in [0,1) with 24 bits of mantissa.
    float next_float() {
        return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f;
    }

    // Uniform in [0,1) with 53 bits of mantissa.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    float next_uniform(float lo, float hi) {
        return lo + (hi - lo) * next_float();
    }

    // Unbiased integer in [0, n), n >= 1. Rejection sampling on the top
    // of the range keeps the distribution exact and portable.
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mgif
