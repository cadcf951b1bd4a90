#include "memloss/covering.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "memloss/errors.hpp"

namespace memloss {

namespace {

// Lift values of the form u + m (u a marked point of `map`, m integer)
// strictly inside (a, b), sorted.
std::vector<double> partition_cuts(const PiecewiseMap& map, double a, double b) {
    const double tol = 1e-12 * std::max(1.0, std::fabs(b));
    std::vector<double> cuts;
    for (const auto& br : map.branches()) {
        for (double m = std::ceil(a - br.u); br.u + m < b - tol; m += 1.0) {
            const double c = br.u + m;
            if (c > a + tol) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

struct Located {
    std::size_t branch;
    long long shift;
};

// Branch (and integer sheet) of `map` containing the lift segment around mid.
Located locate(const PiecewiseMap& map, double mid) {
    const double m = std::floor(mid);
    return {map.branch_index(mid - m), static_cast<long long>(m)};
}

// Pull a lift value back through a chain of (map, branch, shift).
double pull_chain(std::span<const PiecewiseMap* const> maps, std::span<const std::size_t> itin,
                  std::span<const long long> shifts, double y) {
    for (std::size_t k = itin.size(); k-- > 0;) {
        const double z = maps[k]->branch(itin[k]).lift_inverse(y);
        y = z + static_cast<double>(shifts[k]);
    }
    return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// CylinderRefiner
// ---------------------------------------------------------------------------

CylinderRefiner::CylinderRefiner(const PiecewiseMap& first, double window_lo, double window_hi,
                                 std::size_t cap)
    : cap_(cap) {
    if (!(window_lo < window_hi) || window_lo < 0.0 || window_hi > 1.0) {
        throw PreconditionError("CylinderRefiner: window must be a nonempty subinterval of [0, 1]");
    }
    maps_.push_back(first);
    for (std::size_t b = 0; b < first.size(); ++b) {
        const auto& br = first.branch(b);
        const double lo = std::max(br.u, window_lo);
        const double hi = std::min(br.v, window_hi);
        if (!(hi > lo)) continue;
        cylinders_.push_back(Cylinder{lo, hi, {b}, {0}, br.lift(lo), br.lift(hi)});
    }
}

double CylinderRefiner::pullback(const Cylinder& c, double lift_value) const {
    std::vector<const PiecewiseMap*> ptrs;
    ptrs.reserve(maps_.size());
    for (const auto& m : maps_) ptrs.push_back(&m);
    return std::clamp(pull_chain(ptrs, c.itinerary, c.shifts, lift_value), c.lo, c.hi);
}

void CylinderRefiner::refine(const PiecewiseMap& next) {
    std::vector<const PiecewiseMap*> ptrs;
    ptrs.reserve(maps_.size());
    for (const auto& m : maps_) ptrs.push_back(&m);

    std::vector<Cylinder> out;
    out.reserve(cylinders_.size() * 2);
    for (const auto& c : cylinders_) {
        const auto cuts = partition_cuts(next, c.image_lo, c.image_hi);
        double seg_lo = c.image_lo;
        double x_lo = c.lo;
        for (std::size_t s = 0; s <= cuts.size(); ++s) {
            const bool last = s == cuts.size();
            const double seg_hi = last ? c.image_hi : cuts[s];
            const double x_hi =
                last ? c.hi
                     : std::clamp(pull_chain(ptrs, c.itinerary, c.shifts, seg_hi), c.lo, c.hi);
            if (x_hi > x_lo && seg_hi > seg_lo) {
                const auto loc = locate(next, 0.5 * (seg_lo + seg_hi));
                const auto& br = next.branch(loc.branch);
                const auto sh = static_cast<double>(loc.shift);
                Cylinder child{x_lo, x_hi, c.itinerary, c.shifts,
                               br.lift(seg_lo - sh), br.lift(seg_hi - sh)};
                child.itinerary.push_back(loc.branch);
                child.shifts.push_back(loc.shift);
                out.push_back(std::move(child));
                if (out.size() > cap_) {
                    throw PartitionExplosion("cylinder count exceeds cap of " + std::to_string(cap_));
                }
            }
            seg_lo = seg_hi;
            x_lo = x_hi;
        }
    }
    maps_.push_back(next);
    cylinders_ = std::move(out);
}

double CylinderRefiner::max_length() const {
    double m = 0.0;
    for (const auto& c : cylinders_) m = std::max(m, c.length());
    return m;
}

std::vector<Cylinder> cylinder_partition(std::span<const PiecewiseMap> maps, std::size_t n,
                                         std::size_t cap) {
    if (n == 0) throw PreconditionError("cylinder_partition: n must be >= 1");
    if (maps.empty()) throw PreconditionError("cylinder_partition: no maps");
    if (maps.size() != 1 && maps.size() < n) {
        throw PreconditionError("cylinder_partition: fewer maps than requested depth");
    }
    auto map_at = [&](std::size_t i) -> const PiecewiseMap& {
        return maps.size() == 1 ? maps[0] : maps[i];
    };
    CylinderRefiner r(map_at(0), 0.0, 1.0, cap);
    for (std::size_t i = 1; i < n; ++i) r.refine(map_at(i));
    return {r.cylinders().begin(), r.cylinders().end()};
}

// ---------------------------------------------------------------------------
// Covering checks
// ---------------------------------------------------------------------------

bool covers_circle(std::span<const Arc> arcs, double margin) {
    std::vector<std::pair<double, double>> iv;
    for (const auto& a : arcs) {
        if (a.length >= 1.0 + 2.0 * margin) return true;
        const double lo = a.start + margin;
        const double hi = a.start + a.length - margin;
        if (!(hi > lo)) continue;
        iv.emplace_back(lo, hi);
        iv.emplace_back(lo - 1.0, hi - 1.0);
    }
    std::sort(iv.begin(), iv.end());
    // Every point of [0, 1] must lie strictly inside some open interval.
    double reach = 0.0;
    std::size_t i = 0;
    bool first = true;
    while (first || reach <= 1.0) {
        double best = reach;
        while (i < iv.size() && iv[i].first < reach) {
            best = std::max(best, iv[i].second);
            ++i;
        }
        if (!(best > reach)) return false;
        reach = best;
        first = false;
    }
    return true;
}

std::optional<std::size_t> enveloping_time(const PiecewiseMap& g, std::size_t n_max) {
    if (n_max < 1) throw PreconditionError("enveloping_time: n_max must be >= 1");
    CylinderRefiner r(g);
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1) r.refine(g);
        bool all = true;
        for (std::size_t b = 0; b < g.size() && all; ++b) {
            std::vector<Arc> arcs;
            for (const auto& c : r.cylinders()) {
                if (c.itinerary.front() == b) arcs.push_back(c.image());
            }
            all = covers_circle(arcs);
        }
        if (all) return n;
    }
    return std::nullopt;
}

std::size_t refine_until(const PiecewiseMap& g, double a_star, std::size_t cap) {
    if (!(a_star > 0.0)) throw PreconditionError("refine_until: a_star must be positive");
    const double target = 1.0 / (2.0 * a_star);
    CylinderRefiner r(g, 0.0, 1.0, cap);
    std::size_t n = 1;
    while (!(r.max_length() < target)) {
        r.refine(g);
        ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Escape times
// ---------------------------------------------------------------------------

EscapeResult escape_time(const PiecewiseMap& g, const Cylinder& j, std::size_t max_iterations) {
    if (!(j.hi > j.lo)) throw PreconditionError("escape_time: J must have positive length");
    if (max_iterations == 0) max_iterations = std::max<std::size_t>(64, 64 * j.depth());

    EscapeResult r;
    r.lo = j.lo;
    r.hi = j.hi;
    r.image_lo = j.lo;
    r.image_hi = j.hi;
    std::vector<const PiecewiseMap*> chain_maps;

    for (std::size_t k = 0;; ++k) {
        const double a = r.image_lo;
        const double b = r.image_hi;
        const double tol = 1e-12 * std::max(1.0, std::fabs(b));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto& br = g.branch(i);
            const double m = std::ceil(a - tol - br.u);
            if (br.v + m <= b + tol) {
                r.s = k;
                r.covered_branch = i;
                return r;
            }
        }
        if (k >= max_iterations) {
            throw CertificateViolation("escape_time: no escape after " + std::to_string(k) +
                                       " steps; is inf |g'| > 2?");
        }

        const auto cuts = partition_cuts(g, a, b);
        double seg_lo = a;
        double seg_hi = b;
        if (!cuts.empty()) {
            // Pieces between consecutive cuts; keep the longest, earliest on ties.
            double best_len = -1.0;
            double prev = a;
            for (std::size_t s = 0; s <= cuts.size(); ++s) {
                const double next = s == cuts.size() ? b : cuts[s];
                if (next - prev > best_len) {
                    best_len = next - prev;
                    seg_lo = prev;
                    seg_hi = next;
                }
                prev = next;
            }
            const double new_lo =
                seg_lo == a ? r.lo : pull_chain(chain_maps, r.itinerary, r.shifts, seg_lo);
            const double new_hi =
                seg_hi == b ? r.hi : pull_chain(chain_maps, r.itinerary, r.shifts, seg_hi);
            r.lo = std::clamp(new_lo, r.lo, r.hi);
            r.hi = std::clamp(new_hi, r.lo, r.hi);
        }
        const auto loc = locate(g, 0.5 * (seg_lo + seg_hi));
        const auto& br = g.branch(loc.branch);
        const auto sh = static_cast<double>(loc.shift);
        r.itinerary.push_back(loc.branch);
        r.shifts.push_back(loc.shift);
        chain_maps.push_back(&g);
        r.image_lo = br.lift(seg_lo - sh);
        r.image_hi = br.lift(seg_hi - sh);
    }
}

CoveringReport positivity_horizon(const PiecewiseMap& g, double a_star, double epsilon,
                                  std::size_t n_max) {
    const auto an = analyze(g);
    if (!(an.lambda_min > kPiecewiseExpansionFloor)) {
        throw PreconditionError("positivity_horizon: requires inf |g'| > 2");
    }
    if (!(epsilon >= 0.0)) throw PreconditionError("positivity_horizon: epsilon must be >= 0");
    const auto n = enveloping_time(g, n_max);
    if (!n) throw PreconditionError("positivity_horizon: map is not enveloping");

    CoveringReport rep;
    rep.N = *n;
    rep.n1 = refine_until(g, a_star);
    rep.M0 = an.M0;
    rep.epsilon = epsilon;
    for (const auto& c : cylinder_partition(std::span(&g, 1), rep.n1)) {
        auto e = escape_time(g, c, 64 * rep.n1);
        rep.s0 = std::max(rep.s0, e.s);
        rep.s_table.push_back({c, std::move(e)});
    }
    rep.n0 = rep.s0 + rep.N;
    const double n0 = static_cast<double>(rep.n0);
    rep.kappa0 = 0.5 * std::pow(rep.M0, -n0);
    rep.kappa_eps = 0.5 * std::pow(rep.M0 + epsilon, -n0);
    return rep;
}

bool verify_overcover(std::span<const PiecewiseMap> maps, double i_lo, double i_hi, double delta) {
    if (maps.empty()) throw PreconditionError("verify_overcover: no maps");
    if (!(delta >= 0.0) || !(2.0 * delta < i_hi - i_lo)) {
        throw PreconditionError("verify_overcover: need 0 <= delta and 2*delta < |I|");
    }
    CylinderRefiner r(maps[0], i_lo + delta, i_hi - delta);
    for (std::size_t k = 1; k < maps.size(); ++k) r.refine(maps[k]);
    std::vector<Arc> arcs;
    for (const auto& c : r.cylinders()) arcs.push_back(c.image());
    return covers_circle(arcs);
}

}  // namespace memloss
