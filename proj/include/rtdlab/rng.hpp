#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace rtdlab {

/// Stream identifiers; every randomized component draws from its own stream
/// so that adding draws in one place never perturbs another.
enum class Stream : std::uint64_t {
    MdpKernel = 1,
    MdpReward = 2,
    Features = 3,
    Trajectory = 4,
    Test = 99,
};

/// SplitMix64 finalizer, used only to derive well-separated engine seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
@brief Seeded generator with platform-independent output.

Wraps std::mt19937_64, whose output sequence is fixed by the standard. The
standard distribution classes are implementation-defined, so all variates are
derived here from raw 64-bit draws instead.
*/
class Rng {
public:
    explicit Rng(std::uint64_t seed, Stream stream = Stream::Test)
        : engine_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)))) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential(1), i.e. Gamma(1, 1).
    double exponential() { return -std::log1p(-uniform()); }

    /// Standard normal via Box-Muller (one variate per call).
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Inverse-CDF draw from a probability vector. Falls back to the last
    /// index with positive mass when rounding leaves the cumulative sum short.
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0)
                continue;
            acc += probs[i];
            last = i;
            if (u < acc)
                return i;
        }
        return last;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rtdlab
