#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "lhs/common.hpp"

namespace lhs {

// Stage tags used to derive independent per-sample streams.
enum class RngTag : std::uint64_t {
    kToyModel = 1,
    kPoseDraw = 2,
    kScene = 3,
    kMask = 4,
    kJitter = 5,
    kClusters = 6,
    kRedraw = 7,
};

// Counter-based stream: every draw is a keyed hash of (key, counter), so
// streams derived from (master_seed, sample_index, stage) are independent
// and reproducible regardless of scheduling.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed + kPhi)) {}

    RngStream(std::uint64_t seed, std::uint64_t index, RngTag tag)
        : key_(mix(mix(seed + kPhi) ^ mix(index + 2 * kPhi) ^
                   mix(static_cast<std::uint64_t>(tag) + 3 * kPhi))) {}

    // Child stream; advancing the child never touches the parent counter.
    RngStream split(std::uint64_t tag) const {
        RngStream child(0);
        child.key_ = mix(key_ ^ mix(tag + 5 * kPhi));
        return child;
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kPhi); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // 64-bit multiply-shift; bias is negligible for the n used here.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller; one spare cached per stream.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * kPi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ULL;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace lhs
