#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memloss/errors.hpp"

namespace memloss {

/// Closed form of a single branch, evaluated on its lift (a real-valued
/// function whose reduction mod 1 is the circle map).
enum class BranchForm {
    affine,  ///< x -> s*x + c
    sine,    ///< x -> s*x + c + a*sin(2*pi*x)
};

/// One C^2 branch of a circle map on the half-open arc [u, v) of [0, 1).
///
/// The lift may cross integers inside the domain; the branch is then
/// monotone but wraps around the circle, which is how enveloping branches
/// such as 3x on [0, 1/2) are represented.
struct BranchSpec {
    double u = 0.0;
    double v = 1.0;
    BranchForm form = BranchForm::affine;
    double slope = 2.0;
    double offset = 0.0;
    double amplitude = 0.0;

    static BranchSpec affine(double u, double v, double slope, double offset = 0.0);
    static BranchSpec sine(double u, double v, double slope, double offset, double amplitude);

    [[nodiscard]] double length() const { return v - u; }
    [[nodiscard]] double lift(double x) const;
    [[nodiscard]] double d1(double x) const;
    [[nodiscard]] double d2(double x) const;

    /// Solves lift(x) = y for x in [u, v]. Exact for affine branches,
    /// safeguarded Newton for sine branches. Throws MalformedBranch when
    /// the root finder fails to converge.
    [[nodiscard]] double lift_inverse(double y) const;

    // Extremes over the closed domain.
    [[nodiscard]] double min_d1() const;
    [[nodiscard]] double max_d1() const;
    [[nodiscard]] double max_abs_d2() const;

    friend bool operator==(const BranchSpec&, const BranchSpec&) = default;
};

struct Preimage {
    std::size_t branch;
    double x;
    double abs_derivative;
};

/// Circle map given by finitely many branches whose domains tile [0, 1).
class PiecewiseMap {
public:
    explicit PiecewiseMap(std::vector<BranchSpec> branches);

    [[nodiscard]] std::span<const BranchSpec> branches() const { return branches_; }
    [[nodiscard]] std::size_t size() const { return branches_.size(); }
    [[nodiscard]] const BranchSpec& branch(std::size_t i) const { return branches_[i]; }

    /// Index of the branch whose half-open domain contains x in [0, 1).
    [[nodiscard]] std::size_t branch_index(double x) const;

    /// Lift interval [lo, hi) of branch i, snapped so that adjacent
    /// continuous branches share endpoints exactly (mod 1).
    [[nodiscard]] double image_lo(std::size_t i) const { return image_lo_[i]; }
    [[nodiscard]] double image_hi(std::size_t i) const { return image_hi_[i]; }

    /// True if the map has no discontinuity on the circle.
    [[nodiscard]] bool continuous() const { return omega_.empty(); }

    /// Branch start points; 0 is always one of them.
    [[nodiscard]] std::vector<double> marked_points() const;

    /// Genuine discontinuity points (subset of the marked points).
    [[nodiscard]] std::span<const double> discontinuities() const { return omega_; }

    friend bool operator==(const PiecewiseMap& a, const PiecewiseMap& b) {
        return a.branches_ == b.branches_;
    }

private:
    std::vector<BranchSpec> branches_;
    std::vector<double> image_lo_;
    std::vector<double> image_hi_;
    std::vector<double> omega_;
};

struct MapAnalysis {
    double lambda_min = 0.0;  ///< inf |f'|
    double M0 = 0.0;          ///< sup |f'|
    double A = 0.0;           ///< Lasota-Yorke coefficient
    double C1 = 0.0;          ///< Lipschitz bound of log|f'|
    std::vector<double> omega;
    std::optional<double> d_omega;  ///< empty when the map is continuous
};

/// Expansion thresholds used by scenario validation.
inline constexpr double kSmoothExpansionFloor = 1.0;
inline constexpr double kPiecewiseExpansionFloor = 2.0;

[[nodiscard]] double eval_map(const PiecewiseMap& map, double x);

struct Derivatives {
    double first;
    double second;
};
[[nodiscard]] Derivatives eval_derivs(const PiecewiseMap& map, double x);

/// All preimages of y, one entry per (branch, lift sheet) whose image
/// contains y under the half-open convention.
[[nodiscard]] std::vector<Preimage> inverse_branches(const PiecewiseMap& map, double y);

/// Throws PreconditionError when inf |f'| <= 1.
[[nodiscard]] MapAnalysis analyze(const PiecewiseMap& map);

/// Smallest eps such that f lies in the eps-neighborhood of g, measured by
/// marked-point displacement and the C^2 distance of f o xi_fg - g on each
/// marked interval. Empty ("incomparable") when branch counts differ or the
/// distance reaches a quarter of g's minimal marked gap.
[[nodiscard]] std::optional<double> neighborhood_distance(const PiecewiseMap& f,
                                                          const PiecewiseMap& g,
                                                          std::size_t grid_per_interval = 4096);

/// Minimal circular gap between consecutive marked points (1 for a single point).
[[nodiscard]] double marked_gap(const PiecewiseMap& map);

/// Circular distance on [0, 1).
[[nodiscard]] double circle_distance(double a, double b);

/// Reduces x into [0, 1).
[[nodiscard]] double wrap01(double x);

// ---------------------------------------------------------------------------
// Built-in maps
// ---------------------------------------------------------------------------

/// x -> 2x on two half-circle branches.
[[nodiscard]] PiecewiseMap doubling_map();

/// s*x + c mod 1 split into its natural injective branches (at the points
/// where the lift crosses an integer, plus 0).
[[nodiscard]] PiecewiseMap affine_natural(double slope, double offset = 0.0);

/// s*x + c + a*sin(2*pi*x) on the fixed partition {[0, 1/2), [1/2, 1)}.
[[nodiscard]] PiecewiseMap slope_two_branch(double slope, double amplitude = 0.0,
                                            double offset = 0.0);

/// Single-branch circle map s*x + c + a*sin(2*pi*x) (s integer for continuity).
[[nodiscard]] PiecewiseMap smooth_sine_map(double slope, double amplitude, double offset = 0.0);

/// Branch [0, 1/2): 3x; branch [1/2, 1): 2.5x + c.
[[nodiscard]] PiecewiseMap two_slope_wrap(double offset = 0.1);

/// Same map, every branch split where its lift crosses an integer so each
/// piece is injective on the circle.
[[nodiscard]] PiecewiseMap natural_refinement(const PiecewiseMap& map);

[[nodiscard]] std::string describe(const PiecewiseMap& map);

}  // namespace memloss
