#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memloss/bounds.hpp"
#include "memloss/covering.hpp"
#include "memloss/density.hpp"
#include "memloss/map_core.hpp"

namespace memloss {

/// One matching block: `pre` steps, positivity check and subtraction of
/// fraction * kappa, then `post` steps.
struct BlockPlan {
    std::size_t pre = 0;
    std::size_t post = 1;
    double kappa = 0.0;
};

/// Plan for the block starting at step n (the step count after which the block begins).
using BlockPlanner = std::function<BlockPlan(std::size_t start)>;

enum class KappaSource { theoretical, empirical };

[[nodiscard]] std::string to_string(KappaSource source);

enum class StepStage { pushed, subtracted };

/// Snapshot handed to an optional observer after every push and every subtraction.
struct StepEvent {
    std::size_t n;
    StepStage stage;
    bool in_cone;  ///< waiting period is over
    const Density& phi_hat;
    const Density& psi_hat;
};

struct CouplingParams {
    CouplingMode mode = CouplingMode::piecewise;
    /// Subtraction fraction r.
    double fraction = 1.0;
    /// Waiting ends once both densities are within this cone level:
    /// variation <= a* (piecewise) or ratio constant <= L* (smooth).
    double cone_level = 0.0;
    double eps_loc = 0.05;
    /// Added to every positivity and envelope assertion.
    double slack = 0.0;
    BlockPlanner planner;
    bool matching = true;
    KappaSource kappa_source = KappaSource::theoretical;
    std::function<void(const StepEvent&)> observer;
};

/// Blocks of length n0 + tau(a*/(1 - kappa)) with r = 1 and kappa = kappa_eps;
/// slack 20 a*/G.
[[nodiscard]] CouplingParams piecewise_params(const BoundsReport& bounds,
                                              const CoveringReport& covering,
                                              std::size_t resolution);

/// Blocks of length tau(2 L*) with r = 1/2 and the smooth positivity floor;
/// slack 20 L*/G.
[[nodiscard]] CouplingParams smooth_params(const BoundsReport& bounds, std::size_t resolution);

struct StepRecord {
    std::size_t n = 0;
    double l1_distance = 0.0;
    double variation_phi = 0.0;
    double variation_psi = 0.0;
    double min_phi = 0.0;
    double min_psi = 0.0;
    long long block_index = -1;
    double kappa_used = 0.0;
    double residual_mass = 1.0;
    double envelope_value = 2.0;
};

struct BlockRecord {
    std::size_t index = 0;
    std::size_t start = 0;
    std::size_t check_step = 0;
    std::size_t end = 0;
    double kappa = 0.0;
    double fraction = 0.0;
    double min_phi = 0.0;
    double min_psi = 0.0;
    double matched_mass = 0.0;  ///< cumulative 1 - prod(1 - r kappa_k)
    double residual_mass = 1.0;
    double l1_at_end = 0.0;
    bool complete = false;
};

struct CouplingLedger {
    CouplingMode mode = CouplingMode::piecewise;
    /// Nominal block length (of the first block).
    std::size_t block = 0;
    KappaSource kappa_source = KappaSource::theoretical;
    bool matching = true;
    double slack = 0.0;
    std::size_t resolution = 0;
    /// First step at which both densities were inside the cone.
    std::optional<std::size_t> n_wait;
    std::vector<StepRecord> steps;
    std::vector<BlockRecord> blocks;

    [[nodiscard]] std::vector<double> distances() const;
};

/// Evolves the raw pair and the unmatched pair through maps; performs the
/// matching scheme once both are in the cone. Throws CertificateViolation
/// naming the block when a positivity check fails.
[[nodiscard]] CouplingLedger run_coupled(std::span<const PiecewiseMap> maps, const Density& phi,
                                         const Density& psi, const CouplingParams& params);

struct DecayFit {
    double Lambda_emp = 0.0;
    double R2 = 0.0;
    std::size_t n_first = 0;
    std::size_t n_last = 0;
    std::size_t points = 0;
};

inline constexpr double kDistanceFloor = 1e-12;

/// Least squares on (n, log d_n) over d_n > 1e-12 within [first, last].
/// Empty when fewer than 5 points qualify.
[[nodiscard]] std::optional<DecayFit> fit_decay(std::span<const double> distances,
                                                std::size_t first = 0,
                                                std::size_t last = static_cast<std::size_t>(-1));

struct CertifyReport {
    bool pass = true;
    /// max over checked steps of raw distance / envelope.
    double max_ratio = 0.0;
    std::size_t worst_step = 0;
    std::optional<std::size_t> first_failure;
    std::size_t checked = 0;
};

/// Passes iff the raw distance stays within the envelope plus slack at every
/// recorded step (in particular at every block end).
[[nodiscard]] CertifyReport certify(const CouplingLedger& ledger, const BoundsReport& bounds);

/// Columns: n, l1_distance, variation_phi, variation_psi, min_phi, min_psi,
/// block_index, kappa_used, residual_mass, envelope_value.
void write_ledger_csv(std::ostream& os, const CouplingLedger& ledger);

}  // namespace memloss
