#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "memloss/map_core.hpp"

namespace memloss {

/// Open arc (start, start + length) on the circle; length may exceed 1.
struct Arc {
    double start;
    double length;
};

/// Element of the dynamical partition A(F_n): a half-open interval of
/// [0, 1) on which every prefix composition stays inside one branch.
struct Cylinder {
    double lo;
    double hi;
    /// itinerary[k] is the branch of map k containing F_k(x).
    std::vector<std::size_t> itinerary;
    /// shifts[k] is the integer removed from the F_k lift before applying map k.
    std::vector<long long> shifts;
    /// Lift of F_n at lo and hi (F_n is increasing on the cylinder).
    double image_lo;
    double image_hi;

    [[nodiscard]] double length() const { return hi - lo; }
    [[nodiscard]] std::size_t depth() const { return itinerary.size(); }
    [[nodiscard]] Arc image() const { return {wrap01(image_lo), image_hi - image_lo}; }
};

inline constexpr std::size_t kDefaultCylinderCap = 1'000'000;
/// Coverage must hold with this margin on every arc end.
inline constexpr double kCoverMargin = 1e-9;

/// Incrementally builds A(F_n) = join_{i<=n} (F_{i-1})^{-1} A_1(f_i),
/// optionally restricted to a window [lo, hi).
class CylinderRefiner {
public:
    explicit CylinderRefiner(const PiecewiseMap& first, double window_lo = 0.0,
                             double window_hi = 1.0, std::size_t cap = kDefaultCylinderCap);

    /// Adds one more map to the composition. Throws PartitionExplosion if
    /// the cylinder count exceeds the cap.
    void refine(const PiecewiseMap& next);

    [[nodiscard]] std::span<const Cylinder> cylinders() const { return cylinders_; }
    [[nodiscard]] std::size_t depth() const { return maps_.size(); }
    [[nodiscard]] double max_length() const;

    /// Pulls a lift value of F_n on cylinder c back to its point in [c.lo, c.hi].
    [[nodiscard]] double pullback(const Cylinder& c, double lift_value) const;

private:
    std::vector<PiecewiseMap> maps_;
    std::vector<Cylinder> cylinders_;
    std::size_t cap_;
};

/// A(F_n) for the first n maps; a single-map list is repeated (giving A_n(g)).
[[nodiscard]] std::vector<Cylinder> cylinder_partition(std::span<const PiecewiseMap> maps,
                                                       std::size_t n,
                                                       std::size_t cap = kDefaultCylinderCap);

/// True iff the union of the open arcs covers the circle with `margin`
/// to spare at every arc end.
[[nodiscard]] bool covers_circle(std::span<const Arc> arcs, double margin = kCoverMargin);

/// Smallest N <= n_max such that, for every I in A_1, the images
/// g^N(int J) over J in A_N|I cover the circle. Empty if not enveloping.
[[nodiscard]] std::optional<std::size_t> enveloping_time(const PiecewiseMap& g, std::size_t n_max);

/// Smallest n with every element of A_n(g) shorter than 1/(2 a_star).
[[nodiscard]] std::size_t refine_until(const PiecewiseMap& g, double a_star,
                                       std::size_t cap = kDefaultCylinderCap);

struct EscapeResult {
    std::size_t s = 0;
    /// Witness subinterval J_s of J.
    double lo = 0.0;
    double hi = 0.0;
    /// Lift of g^s on J_s.
    double image_lo = 0.0;
    double image_hi = 0.0;
    /// Index of the A_1 element contained in g^s(J_s).
    std::size_t covered_branch = 0;
    std::vector<std::size_t> itinerary;
    std::vector<long long> shifts;
};

/// Nested-interval escape loop: keep J_k inside J; stop once g^k(J_k)
/// contains an element of A_1; otherwise, if g^k(J_k) straddles a partition
/// point, continue on the preimage of the longer piece (ties go to the
/// lower piece). s = 0 when J itself contains an element of A_1.
///
/// Throws CertificateViolation after max_iterations steps (default 64 times
/// the depth of J, at least 64).
[[nodiscard]] EscapeResult escape_time(const PiecewiseMap& g, const Cylinder& j,
                                       std::size_t max_iterations = 0);

struct EscapeEntry {
    Cylinder cylinder;
    EscapeResult escape;
};

struct CoveringReport {
    std::size_t N = 0;
    std::size_t n1 = 0;
    std::vector<EscapeEntry> s_table;
    std::size_t s0 = 0;
    std::size_t n0 = 0;
    double M0 = 0.0;
    double epsilon = 0.0;
    double kappa0 = 0.0;
    double kappa_eps = 0.0;
};

/// Assembles N, n1, s(J) over A_{n1}, s0, n0 = s0 + N, kappa0 = M0^{-n0}/2
/// and kappa_eps = (M0 + eps)^{-n0}/2. Requires inf |g'| > 2 and g enveloping
/// within n_max steps.
[[nodiscard]] CoveringReport positivity_horizon(const PiecewiseMap& g, double a_star,
                                                double epsilon, std::size_t n_max = 16);

/// True iff F_N(I_delta) = S^1, where N = maps.size() and I_delta is I
/// shrunk by delta at both ends. Rejects 2*delta >= |I|.
[[nodiscard]] bool verify_overcover(std::span<const PiecewiseMap> maps, double i_lo, double i_hi,
                                    double delta);

}  // namespace memloss
