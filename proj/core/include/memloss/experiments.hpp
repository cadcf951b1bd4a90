#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memloss/bounds.hpp"
#include "memloss/map_core.hpp"
#include "memloss/scenario.hpp"

namespace memloss {

/// A MapSpec with one knob (slope, amplitude or offset) swept over [lo, hi].
[[nodiscard]] MapCurve parameter_family(const MapSpec& base, const std::string& knob, double lo,
                                        double hi);

struct NamedMap {
    std::string name;
    PiecewiseMap map;
};

/// doubling, slope-2.5, slope-3 two-branch, two-slope wrap.
[[nodiscard]] std::vector<NamedMap> builtin_maps();

struct LyCheck {
    std::string name;
    double lambda = 0.0;
    double A = 0.0;
    std::size_t trials = 0;
    std::size_t violations = 0;
    /// max over trials of lhs - rhs (negative when every trial holds).
    double worst_margin = 0.0;
};

struct LyReport {
    std::vector<LyCheck> checks;
    std::size_t violations = 0;
};

/// Tolerance added to the inequality: 0.02 (1 + variation(phi)).
inline constexpr double kLyTolerance = 0.02;

/// variation(P_f phi) <= 2/lambda(f) variation(phi) + A(f) + tolerance over
/// `trials` random step densities with variation up to max_variation.
[[nodiscard]] LyReport verify_ly(const std::vector<NamedMap>& maps, std::size_t trials,
                                 double max_variation, std::size_t grid, std::uint64_t seed);

struct AbsorbRun {
    std::uint64_t seed = 0;
    double initial_variation = 0.0;
    std::vector<double> variations;  ///< after each step
};

struct AbsorbReport {
    FamilyConstants family;
    double a = 0.0;
    double a_star = 0.0;
    std::size_t tau = 0;
    double tolerance = 0.0;
    std::vector<AbsorbRun> runs;
    double worst_final = 0.0;
    bool pass = false;
};

/// Pushes `seeds` random densities of variation a through tau random maps
/// of the family (parameters uniform on [family.a, family.b]) and checks
/// the final variation against a_star (1 + tolerance).
[[nodiscard]] AbsorbReport absorb(const MapCurve& family, double a, double a_star,
                                  std::size_t seeds, std::size_t grid, std::uint64_t seed,
                                  double tolerance = 0.05);

struct EnvelopeReport {
    std::optional<std::size_t> N;
    std::size_t n_max = 0;
    double delta = 0.0;
    /// verify_overcover of each A_1 element over N steps (empty if not enveloping).
    std::vector<bool> overcover;
};

[[nodiscard]] EnvelopeReport envelope_check(const PiecewiseMap& g, std::size_t n_max, double delta);

}  // namespace memloss
