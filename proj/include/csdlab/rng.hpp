#pragma once

// Counter-based pseudo-random stream.
//
// The n-th 64-bit draw of stream (seed, stream_id) is
//
//     mix64(key + (n + 1) * 0x9E3779B97F4A7C15)
//     key = mix64(seed ^ mix64(stream_id + 0xD1B54A32D192ED03))
//
// where mix64 is the SplitMix64 finalizer. The state is (key, n); each draw
// increments n by one. Everything is integer arithmetic, so streams are
// identical on every platform. Uniform doubles take the top 53 bits; normal
// deviates use the Box-Muller transform and cache the second deviate.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace csdlab {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : key_(mix64(seed ^ mix64(stream_id + 0xD1B54A32D192ED03ULL))) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % n;
    }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // 1 - uniform() lies in (0, 1], so the log is finite.
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace csdlab
