#include "memloss/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "memloss/errors.hpp"
#include "memloss/rng.hpp"
#include "memloss/transfer.hpp"

namespace memloss {

MapCurve parameter_family(const MapSpec& base, const std::string& knob, double lo, double hi) {
    double MapSpec::*field = nullptr;
    if (knob == "slope") field = &MapSpec::slope;
    else if (knob == "amplitude") field = &MapSpec::amplitude;
    else if (knob == "offset") field = &MapSpec::offset;
    else throw ConfigError("unknown family parameter '" + knob + "'");
    return {lo, hi,
            [base, field](double t) {
                MapSpec m = base;
                m.*field = t;
                return m.build();
            },
            base.preset + ":" + knob};
}

std::vector<NamedMap> builtin_maps() {
    return {{"doubling", doubling_map()},
            {"slope-2.5", affine_natural(2.5)},
            {"slope-3", slope_two_branch(3.0)},
            {"two-slope-wrap", two_slope_wrap(0.1)}};
}

LyReport verify_ly(const std::vector<NamedMap>& maps, std::size_t trials, double max_variation,
                   std::size_t grid, std::uint64_t seed) {
    LyReport rep;
    for (std::size_t m = 0; m < maps.size(); ++m) {
        const auto an = analyze(maps[m].map);
        LyCheck c;
        c.name = maps[m].name;
        c.lambda = an.lambda_min;
        c.A = an.A;
        c.trials = trials;
        c.worst_margin = -std::numeric_limits<double>::infinity();
        Rng rng(derive_seed(seed, m));
        for (std::size_t k = 0; k < trials; ++k) {
            const double target = rng.uniform(0.05, 1.0) * max_variation;
            const auto phi = random_bv_density(grid, target, rng);
            const double v = variation(phi);
            const double lhs = variation(push(maps[m].map, phi));
            const double rhs = 2.0 / c.lambda * v + c.A + kLyTolerance * (1.0 + v);
            c.worst_margin = std::max(c.worst_margin, lhs - rhs);
            if (lhs > rhs) ++c.violations;
        }
        rep.violations += c.violations;
        rep.checks.push_back(c);
    }
    return rep;
}

AbsorbReport absorb(const MapCurve& family, double a, double a_star, std::size_t seeds,
                    std::size_t grid, std::uint64_t seed, double tolerance) {
    AbsorbReport rep;
    rep.family = family_constants(family.rule, family.a, family.b);
    rep.a = a;
    rep.a_star = a_star;
    rep.tau = tau_piecewise(a, a_star, rep.family.lambda0, rep.family.A0);
    rep.tolerance = tolerance;
    for (std::size_t k = 0; k < seeds; ++k) {
        AbsorbRun run;
        run.seed = derive_seed(seed, k);
        Rng rng(run.seed);
        auto phi = random_bv_density(grid, a, rng);
        run.initial_variation = variation(phi);
        for (std::size_t n = 0; n < rep.tau; ++n) {
            phi = push(family(rng.uniform(family.a, family.b)), phi);
            run.variations.push_back(variation(phi));
        }
        const double last = run.variations.empty() ? run.initial_variation : run.variations.back();
        rep.worst_final = std::max(rep.worst_final, last);
        rep.runs.push_back(std::move(run));
    }
    rep.pass = rep.worst_final <= a_star * (1.0 + tolerance);
    return rep;
}

EnvelopeReport envelope_check(const PiecewiseMap& g, std::size_t n_max, double delta) {
    EnvelopeReport rep;
    rep.n_max = n_max;
    rep.delta = delta;
    rep.N = enveloping_time(g, n_max);
    if (rep.N) {
        const std::vector<PiecewiseMap> maps(*rep.N, g);
        for (const auto& b : g.branches()) {
            rep.overcover.push_back(2.0 * delta < b.length() && verify_overcover(maps, b.u, b.v, delta));
        }
    }
    return rep;
}

}  // namespace memloss
