#include "memloss/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "memloss/errors.hpp"
#include "memloss/report_io.hpp"
#include "memloss/rng.hpp"

namespace memloss {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kMapStream = 0;
constexpr std::uint64_t kPhiStream = 1;
constexpr std::uint64_t kPsiStream = 2;
constexpr std::size_t kCurveStepCap = 10'000;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

ScenarioKind parse_kind(const std::string& s) {
    if (s == "fixed-map") return ScenarioKind::fixed_map;
    if (s == "neighborhood") return ScenarioKind::neighborhood;
    if (s == "curve-driven") return ScenarioKind::curve_driven;
    if (s == "smooth") return ScenarioKind::smooth;
    throw ConfigError("unknown scenario kind '" + s + "'");
}

MapSpec parse_map(const json& j) {
    MapSpec m;
    if (j.is_string()) {
        m.preset = j.get<std::string>();
    } else if (j.is_object()) {
        m.preset = get_or<std::string>(j, "preset", m.preset);
    } else {
        throw ConfigError("map must be a preset name or an object");
    }
    // Shorthand names fix the slope.
    if (m.preset == "slope-3") {
        m.preset = "slope-two-branch";
        m.slope = 3.0;
    } else if (m.preset == "slope-2.5") {
        m.preset = "affine-natural";
        m.slope = 2.5;
    } else if (m.preset == "two-slope-wrap" || m.preset == "two-slope-wrap-natural") {
        m.offset = 0.1;
    } else if (m.preset == "smooth-sine") {
        m.slope = 2.0;
    }
    if (j.is_object()) {
        m.slope = get_or(j, "slope", m.slope);
        m.amplitude = get_or(j, "amplitude", m.amplitude);
        m.offset = get_or(j, "offset", m.offset);
    }
    (void)m.build();
    return m;
}

DensitySpec parse_density(const json& j) {
    DensitySpec d;
    if (j.is_string()) {
        d.preset = j.get<std::string>();
    } else if (j.is_object()) {
        d.preset = get_or<std::string>(j, "preset", d.preset);
        d.k = get_or(j, "k", d.k);
        d.amplitude = get_or(j, "amplitude", d.amplitude);
        d.levels = get_or(j, "levels", d.levels);
        d.variation = get_or(j, "variation", d.variation);
        if (j.contains("noise")) {
            d.noise.pieces = get_or<std::size_t>(j.at("noise"), "pieces", 16);
            d.noise.amplitude = get_or(j.at("noise"), "amplitude", 0.3);
        }
    } else if (!j.is_null()) {
        throw ConfigError("density must be a preset name or an object");
    }
    if (d.preset != "uniform" && d.preset != "sine" && d.preset != "step" && d.preset != "random-bv") {
        throw ConfigError("unknown density preset '" + d.preset + "'");
    }
    if (d.preset == "step" && d.levels.empty()) throw ConfigError("step density needs levels");
    return d;
}

ojson density_json(const DensitySpec& d) {
    ojson j;
    j["preset"] = d.preset;
    if (d.preset == "sine") {
        j["k"] = d.k;
        j["amplitude"] = d.amplitude;
    }
    if (d.preset == "step") j["levels"] = d.levels;
    if (d.preset == "random-bv") j["variation"] = d.variation;
    if (d.noise.pieces > 0) j["noise"] = {{"pieces", d.noise.pieces}, {"amplitude", d.noise.amplitude}};
    return j;
}

bool admissible_piecewise(const PiecewiseMap& f) {
    return analyze(f).lambda_min > kPiecewiseExpansionFloor;
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::fixed_map: return "fixed-map";
        case ScenarioKind::neighborhood: return "neighborhood";
        case ScenarioKind::curve_driven: return "curve-driven";
        case ScenarioKind::smooth: return "smooth";
    }
    return "unknown";
}

PiecewiseMap MapSpec::build() const {
    if (preset == "doubling") return doubling_map();
    if (preset == "affine-natural") return affine_natural(slope, offset);
    if (preset == "slope-two-branch") return slope_two_branch(slope, amplitude, offset);
    if (preset == "two-slope-wrap") return two_slope_wrap(offset);
    if (preset == "two-slope-wrap-natural") return natural_refinement(two_slope_wrap(offset));
    if (preset == "smooth-sine") return smooth_sine_map(slope, amplitude, offset);
    throw ConfigError("unknown map preset '" + preset + "'");
}

MapCurve CurveSpec::curve() const {
    if (family == "slope") return slope_curve(a, b, base);
    if (family == "amplitude") return amplitude_curve(a, b, base);
    throw ConfigError("unknown curve family '" + family + "'");
}

DrawRadii default_radii(double epsilon) {
    DrawRadii r;
    r.slope = 0.5 * epsilon;
    r.amplitude = std::min(0.003, 0.45 * epsilon / (4.0 * std::numbers::pi * std::numbers::pi));
    return r;
}

Scenario parse_scenario(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    const int version = get_or(j, "schema_version", -1);
    if (version != kSchemaVersion) {
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
    }
    Scenario s;
    s.name = get_or<std::string>(j, "name", s.name);
    s.kind = parse_kind(get_or<std::string>(j, "kind", "fixed-map"));
    if (s.kind == ScenarioKind::smooth) {
        s.map.preset = "smooth-sine";
        s.map.slope = 2.0;
    }
    if (j.contains("map")) s.map = parse_map(j.at("map"));
    s.epsilon = get_or(j, "epsilon", s.epsilon);
    if (s.epsilon < 0.0) throw ConfigError("epsilon must be >= 0");

    s.radii = default_radii(s.epsilon);
    if (s.kind == ScenarioKind::smooth) s.radii = DrawRadii{0.0, 0.05, 0.0};
    if (j.contains("radii")) {
        const auto& r = j.at("radii");
        s.radii.slope = get_or(r, "slope", s.radii.slope);
        s.radii.amplitude = get_or(r, "amplitude", s.radii.amplitude);
        s.radii.offset = get_or(r, "offset", s.radii.offset);
    }

    if (j.contains("curve")) {
        const auto& c = j.at("curve");
        s.curve.family = get_or<std::string>(c, "family", s.curve.family);
        if (s.curve.family == "amplitude") s.curve.base = 3.0;
        s.curve.a = get_or(c, "a", s.curve.a);
        s.curve.b = get_or(c, "b", s.curve.b);
        s.curve.base = get_or(c, "base", s.curve.base);
        if (c.contains("delta") && !c.at("delta").is_null()) s.curve.delta = get_or(c, "delta", 0.0);
        s.curve.delta_factor = get_or(c, "delta_factor", s.curve.delta_factor);
        s.curve.probe_intervals = get_or(c, "probe_intervals", s.curve.probe_intervals);
        s.curve.epsilon_rule = get_or(c, "epsilon_rule", s.curve.epsilon_rule);
        s.curve.override_guarantee = get_or(c, "override", s.curve.override_guarantee);
        if (!(s.curve.b > s.curve.a)) throw ConfigError("curve needs a < b");
        if (s.curve.delta && !(*s.curve.delta > 0.0)) throw ConfigError("curve delta must be positive");
        if (!(s.curve.delta_factor > 0.0)) throw ConfigError("curve delta_factor must be positive");
        (void)s.curve.curve();
    } else if (s.kind == ScenarioKind::curve_driven) {
        throw ConfigError("curve-driven scenario needs a 'curve' block");
    }

    if (j.contains("mode") && !j.at("mode").is_null()) {
        const auto m = get_or<std::string>(j, "mode", "");
        if (m == "smooth") s.mode = CouplingMode::smooth;
        else if (m == "piecewise") s.mode = CouplingMode::piecewise;
        else throw ConfigError("mode must be smooth or piecewise");
    }
    if (j.contains("a_star") && !j.at("a_star").is_null()) s.a_star = get_or(j, "a_star", 0.0);
    s.grid = get_or(j, "grid", s.grid);
    if (j.contains("n_max")) {
        s.n_max = get_or(j, "n_max", s.n_max);
        s.n_max_given = true;
    }
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
    if (j.contains("phi")) s.phi = parse_density(j.at("phi"));
    if (j.contains("psi")) s.psi = parse_density(j.at("psi"));
    s.matching = get_or(j, "matching", s.matching);
    const auto ks = get_or<std::string>(j, "kappa_source", "theoretical");
    if (ks == "theoretical") s.kappa_source = KappaSource::theoretical;
    else if (ks == "empirical") s.kappa_source = KappaSource::empirical;
    else throw ConfigError("kappa_source must be theoretical or empirical");

    if (s.grid < 2 || (s.grid & (s.grid - 1)) != 0) throw ConfigError("grid must be a power of two >= 2");
    return s;
}

ojson to_json(const Scenario& s) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["name"] = s.name;
    j["kind"] = to_string(s.kind);
    j["map"] = {{"preset", s.map.preset}, {"slope", s.map.slope}, {"amplitude", s.map.amplitude},
                {"offset", s.map.offset}};
    j["epsilon"] = s.epsilon;
    j["radii"] = {{"slope", s.radii.slope}, {"amplitude", s.radii.amplitude}, {"offset", s.radii.offset}};
    if (s.kind == ScenarioKind::curve_driven) {
        ojson c;
        c["family"] = s.curve.family;
        c["a"] = s.curve.a;
        c["b"] = s.curve.b;
        c["base"] = s.curve.base;
        c["delta"] = s.curve.delta ? ojson(*s.curve.delta) : ojson(nullptr);
        c["delta_factor"] = s.curve.delta_factor;
        c["probe_intervals"] = s.curve.probe_intervals;
        c["epsilon_rule"] = s.curve.epsilon_rule;
        c["override"] = s.curve.override_guarantee;
        j["curve"] = std::move(c);
    }
    j["mode"] = s.mode ? ojson(to_string(*s.mode)) : ojson(nullptr);
    j["a_star"] = s.a_star ? ojson(*s.a_star) : ojson(nullptr);
    j["grid"] = s.grid;
    j["n_max"] = s.n_max;
    j["seed"] = s.seed;
    j["phi"] = density_json(s.phi);
    j["psi"] = density_json(s.psi);
    j["matching"] = s.matching;
    j["kappa_source"] = to_string(s.kappa_source);
    return j;
}

Density build_density(const DensitySpec& spec, std::size_t grid, std::uint64_t seed,
                      std::uint64_t stream) {
    Rng rng(derive_seed(seed, stream));
    std::vector<double> v(grid, 1.0);
    if (spec.preset == "sine") {
        for (std::size_t i = 0; i < grid; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(grid);
            v[i] = 1.0 + spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.k * x);
        }
    } else if (spec.preset == "step") {
        const auto m = spec.levels.size();
        for (std::size_t i = 0; i < grid; ++i) v[i] = spec.levels[i * m / grid];
    } else if (spec.preset == "random-bv") {
        const auto phi = random_bv_density(grid, spec.variation, rng);
        v.assign(phi.samples().begin(), phi.samples().end());
    }
    if (spec.noise.pieces > 0 && spec.noise.amplitude > 0.0) {
        const auto noise = random_steps(grid, spec.noise.pieces, 0.0, spec.noise.amplitude, rng);
        for (std::size_t i = 0; i < grid; ++i) v[i] += noise[i];
    }
    try {
        return normalize(std::move(v));
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("density: ") + e.what());
    }
}

std::vector<PiecewiseMap> build_sequence(const Scenario& s, double delta,
                                         std::vector<double>* parameters) {
    std::vector<PiecewiseMap> maps;
    maps.reserve(s.n_max);
    Rng rng(derive_seed(s.seed, kMapStream));

    switch (s.kind) {
        case ScenarioKind::fixed_map: {
            const auto g = s.map.build();
            maps.assign(s.n_max, g);
            break;
        }
        case ScenarioKind::neighborhood: {
            const auto g = s.map.build();
            for (std::size_t i = 0; i < s.n_max; ++i) {
                bool accepted = false;
                for (int attempt = 0; attempt < kMaxRedraws && !accepted; ++attempt) {
                    MapSpec m = s.map;
                    m.slope += rng.uniform(-s.radii.slope, s.radii.slope);
                    m.amplitude += rng.uniform(-s.radii.amplitude, s.radii.amplitude);
                    m.offset += rng.uniform(-s.radii.offset, s.radii.offset);
                    try {
                        auto f = m.build();
                        const auto d = neighborhood_distance(f, g);
                        if (d && *d <= s.epsilon && admissible_piecewise(f)) {
                            maps.push_back(std::move(f));
                            accepted = true;
                        }
                    } catch (const PreconditionError&) {
                    } catch (const MalformedBranch&) {
                    }
                }
                if (!accepted) {
                    throw ConfigError("draw " + std::to_string(i) + " failed admissibility " +
                                      std::to_string(kMaxRedraws) + " times");
                }
            }
            break;
        }
        case ScenarioKind::curve_driven: {
            if (!(delta > 0.0)) throw ConfigError("curve-driven sequence needs delta > 0");
            const auto curve = s.curve.curve();
            for (std::size_t i = 0; i < s.n_max; ++i) {
                const double t = std::min(curve.a + static_cast<double>(i) * delta, curve.b);
                auto f = curve(t);
                if (!admissible_piecewise(f)) {
                    throw ConfigError("curve map at t=" + format_double(t) + " has lambda <= 2");
                }
                if (parameters) parameters->push_back(t);
                maps.push_back(std::move(f));
            }
            break;
        }
        case ScenarioKind::smooth: {
            for (std::size_t i = 0; i < s.n_max; ++i) {
                MapSpec m = s.map;
                m.amplitude += rng.uniform(-s.radii.amplitude, s.radii.amplitude);
                auto f = m.build();
                if (!(analyze(f).lambda_min > kSmoothExpansionFloor) || !f.continuous()) {
                    throw ConfigError("smooth scenario map is not a continuous expanding map");
                }
                maps.push_back(std::move(f));
            }
            break;
        }
    }
    return maps;
}

namespace {

CouplingMode resolve_mode(const Scenario& s) {
    switch (s.kind) {
        case ScenarioKind::smooth: return CouplingMode::smooth;
        case ScenarioKind::neighborhood:
        case ScenarioKind::curve_driven: return CouplingMode::piecewise;
        case ScenarioKind::fixed_map: break;
    }
    if (s.mode) return *s.mode;
    const auto g = s.map.build();
    if (analyze(g).lambda_min > kPiecewiseExpansionFloor) return CouplingMode::piecewise;
    if (g.continuous()) return CouplingMode::smooth;
    throw ConfigError("fixed map is neither piecewise-admissible (lambda > 2) nor continuous");
}

double resolve_a_star(const Scenario& s, const FamilyConstants& fam) {
    if (!(fam.lambda0 > kPiecewiseExpansionFloor)) {
        throw ConfigError("piecewise mode needs lambda0 > 2, family has " + format_double(fam.lambda0));
    }
    const double floor = fam.A0 / (1.0 - 2.0 / fam.lambda0);
    const double a_star = s.a_star.value_or(default_a_star(fam.lambda0, fam.A0));
    if (!(a_star > floor) || !(a_star > 0.0)) {
        throw ConfigError("a_star must exceed A0/(1 - 2/lambda0) = " + format_double(floor));
    }
    return a_star;
}

}  // namespace

Plan plan_scenario(const Scenario& s, const Density& phi, const Density& psi) {
    Plan plan;
    const auto mode = resolve_mode(s);

    if (mode == CouplingMode::smooth) {
        plan.maps = build_sequence(s);
        if (s.kind == ScenarioKind::smooth) {
            MapSpec m = s.map;
            const double amp = s.radii.amplitude;
            plan.family = family_constants(
                [m](double a) {
                    MapSpec x = m;
                    x.amplitude += a;
                    return x.build();
                },
                -amp, amp);
        } else {
            plan.family = family_constants(std::span(plan.maps.data(), std::min<std::size_t>(1, plan.maps.size())));
        }
        if (!(plan.family.lambda0 > kSmoothExpansionFloor)) throw ConfigError("smooth mode needs lambda0 > 1");
        const double L_init = std::max(ratio_class_L(phi, 0.05), ratio_class_L(psi, 0.05));
        if (!std::isfinite(L_init)) {
            throw ConfigError("smooth mode needs strictly positive initial densities");
        }
        plan.bounds = smooth_report(plan.family, L_init);
        plan.params = smooth_params(plan.bounds, phi.resolution());
    } else if (s.kind == ScenarioKind::curve_driven) {
        const auto curve = s.curve.curve();
        plan.family = family_constants(curve.rule, curve.a, curve.b);
        const double a_star = resolve_a_star(s, plan.family);
        const auto probes = probe_grid(curve.a, curve.b, s.curve.probe_intervals);
        const double eps = s.curve.epsilon_rule;
        plan.cover = delta0_of_curve(curve, probes, a_star, [eps](double) { return eps; }, plan.family);
        const double delta0 = plan.cover->delta0;
        if (!plan.cover->covered && !s.curve.override_guarantee) {
            throw ConfigError("probe half-intervals leave t=" + format_double(*plan.cover->uncovered) +
                              " uncovered");
        }
        plan.delta = s.curve.delta.value_or(s.curve.delta_factor * delta0);
        if (plan.delta > delta0 * (1.0 + 1e-12) && !s.curve.override_guarantee) {
            throw ConfigError("mesh " + format_double(plan.delta) + " exceeds delta0 " +
                              format_double(delta0) + " (set curve.override to run anyway)");
        }
        Scenario run = s;
        if (!s.n_max_given) {
            const double steps = std::ceil((curve.b - curve.a) / plan.delta);
            run.n_max = static_cast<std::size_t>(std::min(steps, static_cast<double>(kCurveStepCap)));
        }
        plan.maps = build_sequence(run, plan.delta, &plan.parameters);

        BoundsReport b;
        b.mode = CouplingMode::piecewise;
        b.lambda0 = plan.family.lambda0;
        b.A0 = plan.family.A0;
        b.M0_family = plan.family.M0;
        b.C1 = plan.family.C1;
        b.C0 = distortion_constant(b.C1, b.lambda0);
        b.L_star = cone_parameter(b.C0);
        b.a_star = a_star;
        const double a_init = std::max({variation(phi), variation(psi), std::numeric_limits<double>::min()});
        b.tau = tau_piecewise(a_init, a_star, b.lambda0, b.A0);
        b.kappa = 1.0;
        for (const auto& p : plan.cover->probes) {
            b.kappa = std::min(b.kappa, p.kappa);
            b.block = std::max(b.block, p.n);
        }
        b.Lambda = lambda_local(b.kappa, b.block);
        b.delta0 = delta0;
        plan.bounds = b;

        CouplingParams p;
        p.mode = CouplingMode::piecewise;
        p.fraction = 1.0;
        p.cone_level = a_star;
        p.slack = 20.0 * a_star / static_cast<double>(phi.resolution());
        p.planner = [probes = plan.cover->probes, params = plan.parameters](std::size_t start) {
            const double t = params.empty() ? 0.0 : params[std::min(start, params.size() - 1)];
            const CurveProbe* best = nullptr;
            for (const auto& q : probes) {
                if (t < q.half_lo() || t > q.half_hi()) continue;
                if (!best || (q.selected && !best->selected)) best = &q;
            }
            if (!best) {
                // Outside every half interval (only under the override): nearest probe.
                for (const auto& q : probes) {
                    if (!best || std::fabs(q.t - t) < std::fabs(best->t - t)) best = &q;
                }
            }
            return BlockPlan{best->n0, std::max<std::size_t>(1, best->tau), best->kappa};
        };
        plan.params = p;
    } else {
        plan.maps = build_sequence(s);
        const auto g = s.map.build();
        std::vector<PiecewiseMap> fam = plan.maps;
        fam.push_back(g);
        plan.family = family_constants(fam);
        const double a_star = resolve_a_star(s, plan.family);
        try {
            plan.covering = positivity_horizon(g, a_star, s.kind == ScenarioKind::neighborhood ? s.epsilon : 0.0);
        } catch (const PreconditionError& e) {
            throw ConfigError(e.what());
        }
        const double a_init = std::max({variation(phi), variation(psi), std::numeric_limits<double>::min()});
        plan.bounds = piecewise_report(plan.family, a_star, a_init, *plan.covering);
        plan.params = piecewise_params(plan.bounds, *plan.covering, phi.resolution());
    }
    plan.params.matching = s.matching;
    plan.params.kappa_source = s.kappa_source;
    return plan;
}

RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir) {
    RunResult result;
    ojson summary;
    summary["name"] = s.name;
    summary["kind"] = to_string(s.kind);
    const bool write = !out_dir.empty();
    if (write) std::filesystem::create_directories(out_dir);

    try {
        const auto phi = build_density(s.phi, s.grid, s.seed, kPhiStream);
        const auto psi = build_density(s.psi, s.grid, s.seed, kPsiStream);
        auto plan = plan_scenario(s, phi, psi);
        result.bounds = plan.bounds;
        if (write) {
            write_json(out_dir / "scenario.json", to_json(s));
            write_json(out_dir / "bounds.json", to_json(plan.bounds));
            if (plan.covering) write_json(out_dir / "covering.json", to_json(*plan.covering));
            if (plan.cover) {
                auto c = to_json(*plan.cover);
                c["delta"] = plan.delta;
                write_json(out_dir / "curve.json", c);
            }
        }

        auto ledger = run_coupled(plan.maps, phi, psi, plan.params);
        result.fit = fit_decay(ledger.distances());
        result.certificate = certify(ledger, plan.bounds);
        if (write) {
            std::ofstream csv(out_dir / "ledger.csv", std::ios::binary);
            write_ledger_csv(csv, ledger);
            write_json(out_dir / "ledger.json", ledger_summary(ledger));
            write_json(out_dir / "fit.json", to_json(result.fit));
            write_json(out_dir / "certify.json", to_json(*result.certificate));
        }
        summary["steps"] = plan.maps.size();
        summary["final_l1_distance"] = ledger.steps.back().l1_distance;
        result.ledger = std::move(ledger);
        if (result.certificate->pass) {
            result.exit_code = 0;
            result.message = "ok";
        } else {
            result.exit_code = 1;
            result.message = "envelope violated at step " + std::to_string(*result.certificate->first_failure);
        }
    } catch (const CertificateViolation& e) {
        result.exit_code = 1;
        result.message = e.what();
    } catch (const ConfigError& e) {
        result.exit_code = 2;
        result.message = e.what();
    } catch (const PreconditionError& e) {
        result.exit_code = 2;
        result.message = e.what();
    } catch (const MalformedBranch& e) {
        result.exit_code = 2;
        result.message = e.what();
    } catch (const PartitionExplosion& e) {
        result.exit_code = 2;
        result.message = e.what();
    }

    summary["exit_code"] = result.exit_code;
    summary["message"] = result.message;
    if (write) write_json(out_dir / "summary.json", summary);
    return result;
}

}  // namespace memloss
