#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "memloss/density.hpp"

namespace memloss {

/// MT19937-64 with an explicit integer-to-real conversion, so a seed gives
/// the same stream on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed (splitmix64 finalizer).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Random step function with random breakpoints and levels in [lo, hi],
/// sampled on the grid (not normalized).
[[nodiscard]] std::vector<double> random_steps(std::size_t resolution, std::size_t pieces, double lo,
                                               double hi, Rng& rng);

/// Normalized random step density whose variation is exactly `target` when
/// the raw step function exceeds it (mixing with the uniform density), and
/// at most `target` otherwise.
[[nodiscard]] Density random_bv_density(std::size_t resolution, double target, Rng& rng);

/// 1 + sum of `modes` random Fourier modes with total amplitude below `amplitude`.
[[nodiscard]] Density random_lipschitz_density(std::size_t resolution, Rng& rng,
                                               std::size_t modes = 4, double amplitude = 0.5);

}  // namespace memloss
