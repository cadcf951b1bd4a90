#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memloss/bounds.hpp"
#include "memloss/coupling.hpp"
#include "memloss/covering.hpp"
#include "memloss/density.hpp"
#include "memloss/map_core.hpp"

namespace memloss {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { fixed_map, neighborhood, curve_driven, smooth };

[[nodiscard]] std::string to_string(ScenarioKind kind);

/// Named map preset plus the three numeric knobs every family shares.
/// Presets: doubling, affine-natural, slope-two-branch, two-slope-wrap,
/// two-slope-wrap-natural, smooth-sine.
struct MapSpec {
    std::string preset = "slope-two-branch";
    double slope = 3.0;
    double amplitude = 0.0;
    double offset = 0.0;

    [[nodiscard]] PiecewiseMap build() const;
};

/// Half-widths of the uniform parameter box around the centre map.
struct DrawRadii {
    double slope = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
};

struct NoiseSpec {
    std::size_t pieces = 0;
    double amplitude = 0.0;
};

/// Density presets: uniform, sine (k, amplitude), step (levels), random-bv (variation).
struct DensitySpec {
    std::string preset = "uniform";
    int k = 1;
    double amplitude = 0.5;
    std::vector<double> levels;
    double variation = 10.0;
    NoiseSpec noise;
};

struct CurveSpec {
    std::string family = "slope";
    double a = 0.0;
    double b = 1.0;
    double base = 2.5;
    std::optional<double> delta;
    double delta_factor = 1.0;
    std::size_t probe_intervals = 32;
    double epsilon_rule = 0.05;
    bool override_guarantee = false;

    [[nodiscard]] MapCurve curve() const;
};

struct Scenario {
    std::string name = "scenario";
    ScenarioKind kind = ScenarioKind::fixed_map;
    MapSpec map;
    DrawRadii radii;
    double epsilon = 0.0;
    CurveSpec curve;
    std::optional<CouplingMode> mode;
    std::optional<double> a_star;
    std::size_t grid = 4096;
    std::size_t n_max = 40;
    bool n_max_given = false;
    std::uint64_t seed = 0;
    DensitySpec phi;
    DensitySpec psi;
    bool matching = true;
    KappaSource kappa_source = KappaSource::theoretical;
};

/// Throws ConfigError on schema or value errors.
[[nodiscard]] Scenario parse_scenario(const nlohmann::json& j);
[[nodiscard]] nlohmann::ordered_json to_json(const Scenario& s);

[[nodiscard]] Density build_density(const DensitySpec& spec, std::size_t grid, std::uint64_t seed,
                                    std::uint64_t stream);

/// Maximal redraws per sequence position before the scenario aborts.
inline constexpr int kMaxRedraws = 100;

/// Everything needed to run the coupling for a scenario.
struct Plan {
    std::vector<PiecewiseMap> maps;
    std::vector<double> parameters;  ///< t_i for curve-driven scenarios
    FamilyConstants family;
    BoundsReport bounds;
    std::optional<CoveringReport> covering;
    std::optional<CurveCover> cover;
    double delta = 0.0;
    CouplingParams params;
};

/// Default draw radii for the neighborhood of a slope-two-branch map:
/// slope eps/2, sine amplitude min(0.003, 0.45 eps / (4 pi^2)).
[[nodiscard]] DrawRadii default_radii(double epsilon);

/// fixed-map: n_max copies; neighborhood: i.i.d. admissible draws;
/// curve-driven: gamma(t_i) with t_i = a + i*delta clipped to b;
/// smooth: 2x + a_i sin(2 pi x) with a_i uniform in +-amplitude.
/// Throws ConfigError after kMaxRedraws failed draws.
[[nodiscard]] std::vector<PiecewiseMap> build_sequence(const Scenario& s, double delta = 0.0,
                                                       std::vector<double>* parameters = nullptr);

/// Computes bounds, covering and the block schedule. Throws ConfigError
/// when a curve-driven mesh exceeds delta0 without the override flag.
[[nodiscard]] Plan plan_scenario(const Scenario& s, const Density& phi, const Density& psi);

struct RunResult {
    int exit_code = 0;
    std::string message;
    std::optional<CouplingLedger> ledger;
    std::optional<BoundsReport> bounds;
    std::optional<CertifyReport> certificate;
    std::optional<DecayFit> fit;
};

/// Runs the full pipeline and writes ledger.csv, bounds.json, covering.json,
/// curve.json, fit.json, certify.json and summary.json into out_dir (when
/// nonempty). Exit code 0 on success, 1 on certificate violation, 2 on
/// configuration error.
[[nodiscard]] RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace memloss
