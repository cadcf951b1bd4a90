#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memloss/covering.hpp"
#include "memloss/map_core.hpp"

namespace memloss {

/// Extremal analytic quantities of a map family.
struct FamilyConstants {
    double lambda0 = 0.0;  ///< inf of lambda(f)
    double A0 = 0.0;       ///< sup of A(f)
    double M0 = 0.0;       ///< sup of sup |f'|
    double C1 = 0.0;       ///< sup of the log-derivative Lipschitz bound
};

[[nodiscard]] FamilyConstants family_constants(std::span<const PiecewiseMap> maps);

/// Samples rule on a uniform grid of [lo, hi] (endpoints included).
[[nodiscard]] FamilyConstants family_constants(const std::function<PiecewiseMap(double)>& rule,
                                               double lo, double hi, std::size_t samples = 65);

enum class CouplingMode { smooth, piecewise };

[[nodiscard]] std::string to_string(CouplingMode mode);

struct BoundsReport {
    CouplingMode mode = CouplingMode::piecewise;
    double lambda0 = 0.0;
    double A0 = 0.0;
    double M0_family = 0.0;
    double C1 = 0.0;
    double C0 = 0.0;
    double L_star = 0.0;
    /// Piecewise mode only.
    std::optional<double> a_star;
    std::size_t tau = 0;
    double kappa = 0.0;
    std::size_t block = 0;
    double Lambda = 0.0;
    /// Curve-driven scenarios only.
    std::optional<double> delta0;
};

/// Smallest n >= 0 with n >= ln((a* - A0/(1 - 2/lambda0))/a) / ln(2/lambda0).
[[nodiscard]] std::size_t tau_piecewise(double a, double a_star, double lambda0, double A0);

/// Smallest n >= 0 with L * lambda0^-n <= C0.
[[nodiscard]] std::size_t tau_smooth(double L, double lambda0, double C0);

/// Floor applied to C0 so affine families still get a finite tau_smooth.
inline constexpr double kDistortionFloor = 1e-6;

/// C1 / (lambda0 - 1), floored at kDistortionFloor.
[[nodiscard]] double distortion_constant(double C1, double lambda0);

/// 4 * C0.
[[nodiscard]] double cone_parameter(double C0);

/// Lower bound on any unit-integral density whose ratio constant is L.
[[nodiscard]] double smooth_positivity_floor(double L_star);

/// (1 - kappa)^(1/block).
[[nodiscard]] double lambda_local(double kappa, std::size_t block);

/// C * Lambda^n.
[[nodiscard]] double envelope(double C, double Lambda, std::size_t n);

/// 2 * (1 - r*kappa)^floor(n/block).
[[nodiscard]] double envelope_block(double kappa, double r, std::size_t block, std::size_t n);

/// 1.25 * A0 / (1 - 2/lambda0).
[[nodiscard]] double default_a_star(double lambda0, double A0);

/// Piecewise-mode report: tau for the initial variation a_init, kappa from
/// the covering report, block = n0 + tau(a* / (1 - kappa)).
[[nodiscard]] BoundsReport piecewise_report(const FamilyConstants& family, double a_star,
                                            double a_init, const CoveringReport& covering);

/// Smooth-mode report: tau for the initial ratio constant L_init,
/// block = tau(2 L*), Lambda from kappa/2 per block.
[[nodiscard]] BoundsReport smooth_report(const FamilyConstants& family, double L_init);

/// A path t -> PiecewiseMap on [a, b].
struct MapCurve {
    double a = 0.0;
    double b = 1.0;
    std::function<PiecewiseMap(double)> rule;
    std::string name;

    [[nodiscard]] PiecewiseMap operator()(double t) const { return rule(t); }
};

/// s(t) = base + t on the fixed two-branch partition.
[[nodiscard]] MapCurve slope_curve(double a = 0.0, double b = 1.0, double base = 2.5);

/// slope * x + t * sin(2 pi x) on the fixed two-branch partition.
[[nodiscard]] MapCurve amplitude_curve(double a, double b, double slope = 3.0);

struct CurveProbe {
    double t = 0.0;
    double epsilon = 0.0;
    double alpha = 0.0;
    double kappa = 0.0;
    std::size_t n0 = 0;
    std::size_t tau = 0;
    std::size_t n = 0;  ///< n0 + tau
    bool selected = false;

    [[nodiscard]] double half_lo() const { return t - 0.5 * alpha; }
    [[nodiscard]] double half_hi() const { return t + 0.5 * alpha; }
};

struct CurveCover {
    double delta0 = 0.0;
    std::vector<CurveProbe> probes;
    bool covered = false;
    /// First parameter outside every half interval, when not covered.
    std::optional<double> uncovered;
};

inline constexpr int kBisectionIterations = 40;

/// For every probe: eps_j = min(eps_rule(t_j), marked_gap(g_j)/4), alpha_j by
/// bisection so that gamma(V_alpha) stays in U_eps_j(g_j), and
/// n_j = n0(g_j) + tau(a* / (1 - kappa(g_j))). Probes whose half intervals are
/// needed to cover [a, b] are flagged by a greedy sweep.
///
/// delta0 is the minimum of alpha_j / (2 n_j) over all probes, so a finer
/// probe grid never certifies a larger mesh.
[[nodiscard]] CurveCover delta0_of_curve(const MapCurve& curve, std::span<const double> probes,
                                         double a_star,
                                         const std::function<double(double)>& eps_rule,
                                         const FamilyConstants& family);

/// Uniform probe grid a, a + h, ..., b.
[[nodiscard]] std::vector<double> probe_grid(double a, double b, std::size_t intervals);

}  // namespace memloss
