#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memloss/errors.hpp"

namespace memloss {

/// Probability density on the unit circle, stored as G samples at x_i = i/G
/// and read as the periodic piecewise-linear interpolant.
///
/// Every Density is nonnegative with unit trapezoidal integral; the
/// constructors normalize and reject anything else.
class Density {
public:
    /// Validates (G a power of two >= 2, samples >= 0, positive integral)
    /// and rescales to unit integral.
    static Density from_samples(std::vector<double> samples);

    /// Keeps the sample bits as given; requires |integral - 1| <= 1e-9.
    static Density from_normalized_samples(std::vector<double> samples);

    static Density uniform(std::size_t resolution);

    /// Samples fn at the grid points, then normalizes.
    static Density sample(std::size_t resolution, const std::function<double(double)>& fn);

    [[nodiscard]] std::size_t resolution() const { return samples_.size(); }
    [[nodiscard]] std::span<const double> samples() const { return samples_; }
    [[nodiscard]] double operator[](std::size_t i) const { return samples_[i]; }
    [[nodiscard]] double grid_point(std::size_t i) const {
        return static_cast<double>(i) / static_cast<double>(samples_.size());
    }

    /// Periodic linear interpolation at any real x.
    [[nodiscard]] double value_at(double x) const;

    [[nodiscard]] double integral() const;

    friend bool operator==(const Density&, const Density&) = default;

private:
    explicit Density(std::vector<double> samples) : samples_(std::move(samples)) {}
    std::vector<double> samples_;
};

/// Periodic trapezoid rule on a uniform grid (the sample mean).
[[nodiscard]] double trapezoid_integral(std::span<const double> samples);

/// Divides by the trapezoidal integral; rejects integral <= 0.
[[nodiscard]] Density normalize(std::vector<double> samples);

[[nodiscard]] double l1_distance(const Density& phi, const Density& psi);

/// Exact total variation of the periodic piecewise-linear interpolant.
[[nodiscard]] double variation(const Density& phi);
[[nodiscard]] double variation(std::span<const double> samples);

[[nodiscard]] double min_value(const Density& phi);

/// Smallest L with |phi(x)/phi(y) - 1| <= L d(x, y) over all grid pairs at
/// circular distance below eps_loc. +infinity if any sample is zero.
[[nodiscard]] double ratio_class_L(const Density& phi, double eps_loc);

/// (phi - fraction*kappa) / (1 - fraction*kappa). Rejects fraction*kappa
/// above min_value(phi) and fraction outside (0, 1].
[[nodiscard]] Density match_subtract(const Density& phi, double kappa, double fraction);

struct RatioClassParams {
    double L = 0.0;
    double eps_loc = 0.05;
};

/// Locality radius must stay below 1/4.
void validate(const RatioClassParams& params);

/// Two-column CSV (x, value), 17 significant digits.
void write_csv(std::ostream& os, const Density& phi);
[[nodiscard]] Density read_csv(std::istream& is);

/// Shortest decimal that round-trips (up to 17 significant digits).
[[nodiscard]] std::string format_double(double v);

}  // namespace memloss
