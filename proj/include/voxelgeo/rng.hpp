#pragma once

#include <cstdint>

namespace voxelgeo {

/// SplitMix64 mixing step. Bijective on 64-bit values; one step is enough to
/// decorrelate consecutive seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent sub-seed for a numbered stream under one root seed. Every
/// stochastic choice in the pipeline derives from the configured seed
/// through this, so a single integer reproduces a whole run.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root + splitmix64(stream));
}

/// Compact counter-based generator: value k of a stream is a pure function
/// of (seed, k), so parallel consumers stay deterministic.
class SplitMix {
  public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_double(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

  private:
    std::uint64_t state_;
};

}  // namespace voxelgeo
