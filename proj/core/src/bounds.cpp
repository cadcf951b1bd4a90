#include "memloss/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memloss/errors.hpp"

namespace memloss {

FamilyConstants family_constants(std::span<const PiecewiseMap> maps) {
    if (maps.empty()) throw PreconditionError("family_constants: empty family");
    FamilyConstants fc;
    fc.lambda0 = std::numeric_limits<double>::infinity();
    for (const auto& f : maps) {
        const auto an = analyze(f);
        fc.lambda0 = std::min(fc.lambda0, an.lambda_min);
        fc.A0 = std::max(fc.A0, an.A);
        fc.M0 = std::max(fc.M0, an.M0);
        fc.C1 = std::max(fc.C1, an.C1);
    }
    return fc;
}

FamilyConstants family_constants(const std::function<PiecewiseMap(double)>& rule, double lo,
                                 double hi, std::size_t samples) {
    if (samples < 2 || !(hi >= lo)) throw PreconditionError("family_constants: bad sampling range");
    std::vector<PiecewiseMap> maps;
    maps.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(samples - 1);
        maps.push_back(rule(i + 1 == samples ? hi : t));
    }
    return family_constants(maps);
}

std::string to_string(CouplingMode mode) {
    return mode == CouplingMode::smooth ? "smooth" : "piecewise";
}

std::size_t tau_piecewise(double a, double a_star, double lambda0, double A0) {
    if (!(lambda0 > 2.0)) throw PreconditionError("tau_piecewise: lambda0 must exceed 2");
    if (!(a > 0.0)) throw PreconditionError("tau_piecewise: a must be positive");
    const double q = 2.0 / lambda0;
    const double margin = a_star - A0 / (1.0 - q);
    if (!(margin > 0.0)) {
        throw PreconditionError("tau_piecewise: a_star must exceed A0 / (1 - 2/lambda0)");
    }
    if (a <= margin) return 0;
    const double bound = std::log(margin / a) / std::log(q);
    return static_cast<std::size_t>(std::max(0.0, std::ceil(bound - 1e-12)));
}

std::size_t tau_smooth(double L, double lambda0, double C0) {
    if (!(lambda0 > 1.0)) throw PreconditionError("tau_smooth: lambda0 must exceed 1");
    if (!(L > 0.0) || !(C0 > 0.0)) throw PreconditionError("tau_smooth: L and C0 must be positive");
    if (!std::isfinite(L)) throw PreconditionError("tau_smooth: L must be finite");
    std::size_t n = 0;
    double v = L;
    while (v > C0) {
        v /= lambda0;
        ++n;
    }
    return n;
}

double distortion_constant(double C1, double lambda0) {
    if (!(lambda0 > 1.0)) throw PreconditionError("distortion_constant: lambda0 must exceed 1");
    return std::max(C1 / (lambda0 - 1.0), kDistortionFloor);
}

double cone_parameter(double C0) { return 4.0 * C0; }

double smooth_positivity_floor(double L_star) { return std::exp(-0.5 * L_star); }

double lambda_local(double kappa, std::size_t block) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw PreconditionError("lambda_local: kappa must be in (0,1)");
    if (block < 1) throw PreconditionError("lambda_local: block must be >= 1");
    return std::pow(1.0 - kappa, 1.0 / static_cast<double>(block));
}

double envelope(double C, double Lambda, std::size_t n) {
    if (!(Lambda > 0.0 && Lambda < 1.0)) throw PreconditionError("envelope: Lambda must be in (0,1)");
    return C * std::pow(Lambda, static_cast<double>(n));
}

double envelope_block(double kappa, double r, std::size_t block, std::size_t n) {
    if (block < 1) throw PreconditionError("envelope_block: block must be >= 1");
    return 2.0 * std::pow(1.0 - r * kappa, static_cast<double>(n / block));
}

double default_a_star(double lambda0, double A0) {
    if (!(lambda0 > 2.0)) throw PreconditionError("default_a_star: lambda0 must exceed 2");
    return 1.25 * A0 / (1.0 - 2.0 / lambda0);
}

BoundsReport piecewise_report(const FamilyConstants& family, double a_star, double a_init,
                              const CoveringReport& covering) {
    BoundsReport r;
    r.mode = CouplingMode::piecewise;
    r.lambda0 = family.lambda0;
    r.A0 = family.A0;
    r.M0_family = family.M0;
    r.C1 = family.C1;
    r.C0 = distortion_constant(family.C1, family.lambda0);
    r.L_star = cone_parameter(r.C0);
    r.a_star = a_star;
    r.tau = tau_piecewise(std::max(a_init, std::numeric_limits<double>::min()), a_star,
                          family.lambda0, family.A0);
    r.kappa = covering.kappa_eps;
    r.block = covering.n0 + tau_piecewise(a_star / (1.0 - r.kappa), a_star, family.lambda0, family.A0);
    r.Lambda = lambda_local(r.kappa, r.block);
    return r;
}

BoundsReport smooth_report(const FamilyConstants& family, double L_init) {
    BoundsReport r;
    r.mode = CouplingMode::smooth;
    r.lambda0 = family.lambda0;
    r.A0 = family.A0;
    r.M0_family = family.M0;
    r.C1 = family.C1;
    r.C0 = distortion_constant(family.C1, family.lambda0);
    r.L_star = cone_parameter(r.C0);
    r.tau = L_init > 0.0 ? tau_smooth(L_init, family.lambda0, r.C0) : 0;
    r.kappa = smooth_positivity_floor(r.L_star);
    r.block = std::max<std::size_t>(1, tau_smooth(2.0 * r.L_star, family.lambda0, r.C0));
    r.Lambda = lambda_local(0.5 * r.kappa, r.block);
    return r;
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

MapCurve slope_curve(double a, double b, double base) {
    return {a, b, [base](double t) { return slope_two_branch(base + t); }, "slope"};
}

MapCurve amplitude_curve(double a, double b, double slope) {
    return {a, b, [slope](double t) { return slope_two_branch(slope, t); }, "amplitude"};
}

std::vector<double> probe_grid(double a, double b, std::size_t intervals) {
    if (intervals < 1 || !(b > a)) throw PreconditionError("probe_grid: bad range");
    std::vector<double> t(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(intervals);
    }
    t.back() = b;
    return t;
}

namespace {

constexpr std::size_t kAlphaSamples = 9;
constexpr std::size_t kAlphaGrid = 1024;

bool inside_neighborhood(const MapCurve& curve, const PiecewiseMap& g, double t, double alpha,
                         double eps) {
    const double lo = std::max(curve.a, t - alpha);
    const double hi = std::min(curve.b, t + alpha);
    for (std::size_t i = 0; i < kAlphaSamples; ++i) {
        const double s =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kAlphaSamples - 1);
        const auto d = neighborhood_distance(curve(s), g, kAlphaGrid);
        if (!d || *d > eps) return false;
    }
    return true;
}

}  // namespace

CurveCover delta0_of_curve(const MapCurve& curve, std::span<const double> probes, double a_star,
                           const std::function<double(double)>& eps_rule,
                           const FamilyConstants& family) {
    if (probes.empty()) throw PreconditionError("delta0_of_curve: no probes");
    if (!(curve.b > curve.a)) throw PreconditionError("delta0_of_curve: empty parameter interval");
    const double width = curve.b - curve.a;

    CurveCover out;
    out.delta0 = std::numeric_limits<double>::infinity();
    for (double t : probes) {
        if (t < curve.a || t > curve.b) throw PreconditionError("delta0_of_curve: probe outside [a, b]");
        const auto g = curve(t);
        CurveProbe p;
        p.t = t;
        p.epsilon = std::min(eps_rule(t), 0.25 * marked_gap(g));
        if (!(p.epsilon > 0.0)) throw PreconditionError("delta0_of_curve: epsilon must be positive");

        if (inside_neighborhood(curve, g, t, width, p.epsilon)) {
            p.alpha = width;
        } else {
            double lo = 0.0;
            double hi = width;
            for (int it = 0; it < kBisectionIterations; ++it) {
                const double mid = 0.5 * (lo + hi);
                (inside_neighborhood(curve, g, t, mid, p.epsilon) ? lo : hi) = mid;
            }
            p.alpha = lo;
        }

        const auto cov = positivity_horizon(g, a_star, p.epsilon);
        p.n0 = cov.n0;
        p.kappa = cov.kappa_eps;
        p.tau = tau_piecewise(a_star / (1.0 - p.kappa), a_star, family.lambda0, family.A0);
        p.n = p.n0 + p.tau;
        out.delta0 = std::min(out.delta0, p.alpha / (2.0 * static_cast<double>(p.n)));
        out.probes.push_back(p);
    }

    // Greedy sweep: from the current frontier pick the half interval that
    // contains it and reaches furthest.
    std::vector<std::size_t> order(out.probes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return out.probes[x].half_lo() < out.probes[y].half_lo();
    });
    double frontier = curve.a;
    std::size_t k = 0;
    while (frontier < curve.b) {
        std::optional<std::size_t> best;
        while (k < order.size() && out.probes[order[k]].half_lo() <= frontier) {
            const auto j = order[k];
            if (!best || out.probes[j].half_hi() > out.probes[*best].half_hi()) best = j;
            ++k;
        }
        if (!best || !(out.probes[*best].half_hi() > frontier)) {
            out.uncovered = frontier;
            break;
        }
        out.probes[*best].selected = true;
        frontier = out.probes[*best].half_hi();
    }
    out.covered = !out.uncovered.has_value();
    return out;
}

}  // namespace memloss
