#pragma once

#include <cmath>
#include <cstdint>

namespace varprof {

/// Counter-based splittable PRNG (SplitMix64). A stream is a 64-bit counter
/// advanced by the golden-ratio increment and passed through a finalizer;
/// child streams are derived by hashing (seed, index), so parallel and serial
/// trial orderings produce identical draws.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Independent child stream for trial/worker `index`.
    SplitMix64 child(std::uint64_t index) const {
        return SplitMix64(mix(state_ ^ (0xD6E8FEB86659FD93ULL * (index + 1))));
    }

    /// Uniform on [0,1) with 53-bit mantissa.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [-a, a].
    double uniform_pm(double a) { return a * (2.0 * uniform01() - 1.0); }

    /// Standard normal via the polar method; the spare is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// +1 or -1 with equal probability.
    double rademacher() { return (next_u64() >> 63) ? 1.0 : -1.0; }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace varprof
