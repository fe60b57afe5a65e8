#pragma once

#include <cstdint>

namespace nclab {

// SplitMix64 stream. Small, fast, and good enough for coefficient draws and
// erasure sampling; every consumer seeds one explicitly so results are
// reproducible bit-for-bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform over [0, 2^bits). Unbiased because 2^bits divides 2^64.
    std::uint32_t bits(unsigned nbits) {
        return static_cast<std::uint32_t>(next() & ((1ull << nbits) - 1ull));
    }

    // Uniform double in [0, 1) with 53 significant bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        const auto threshold =
            static_cast<std::uint64_t>(static_cast<long double>(p) * 18446744073709551616.0L);
        return next() < threshold;
    }

private:
    std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}
}  // namespace detail

// Counter construction: stream i of a master seed. Trials seeded this way can
// run in any order (or in parallel) and still reproduce the same draws.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
    return detail::mix64(seed ^ detail::mix64(0x9E3779B97F4A7C15ull * (index + 1)));
}

}  // namespace nclab
