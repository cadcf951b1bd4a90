#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memloss/density.hpp"
#include "memloss/map_core.hpp"

namespace memloss {

struct PushResult {
    Density density;
    /// Trapezoidal integral of the raw pullback before renormalization.
    double renorm_factor;
};

/// Transfer operator applied by pullback: at each grid point, sum of
/// phi(preimage)/|f'(preimage)| over all preimages, with phi read through
/// periodic linear interpolation, then renormalized to unit integral.
///
/// Throws CertificateViolation if the renormalization factor leaves [0.5, 2].
[[nodiscard]] PushResult push_detailed(const PiecewiseMap& map, const Density& phi);
[[nodiscard]] Density push(const PiecewiseMap& map, const Density& phi);

/// P_{F_k}(phi) for k = 1..maps.size().
[[nodiscard]] std::vector<Density> push_sequence(std::span<const PiecewiseMap> maps,
                                                 const Density& phi);

/// Column-stochastic Ulam discretization with B bins:
/// entry (i, j) = m(bin_j ∩ f^{-1} bin_i) / m(bin_j).
class UlamMatrix {
public:
    UlamMatrix(std::size_t bins, std::vector<double> entries);

    [[nodiscard]] std::size_t bins() const { return bins_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return entries_[j * bins_ + i];
    }
    [[nodiscard]] double column_sum(std::size_t j) const;

    /// Matrix-vector product on bin masses.
    [[nodiscard]] std::vector<double> apply(std::span<const double> masses) const;

private:
    std::size_t bins_;
    std::vector<double> entries_;  // column-major
};

/// Exact interval arithmetic for affine branches, 64-point midpoint
/// quadrature per bin for sine branches.
[[nodiscard]] UlamMatrix ulam_matrix(const PiecewiseMap& map, std::size_t bins);
[[nodiscard]] std::vector<double> ulam_push(const UlamMatrix& u, std::span<const double> masses);

/// Bin averages of the piecewise-linear interpolant (exact integration).
[[nodiscard]] std::vector<double> bin_averages(const Density& phi, std::size_t bins);

/// L1 distance between bin-averaged push(map, phi) and the Ulam image of
/// bin-averaged phi. B must divide G.
[[nodiscard]] double backend_consistency(const PiecewiseMap& map, const Density& phi,
                                         std::size_t bins);

}  // namespace memloss
