// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memloss/bounds.hpp"
#include "memloss/coupling.hpp"
#include "memloss/covering.hpp"
#include "memloss/density.hpp"
#include "memloss/experiments.hpp"
#include "memloss/rng.hpp"
#include "memloss/scenario.hpp"
#include "memloss/transfer.hpp"

using namespace memloss;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("memloss_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

// ---------------------------------------------------------------------------

Verdict ac1() {
    const std::size_t G = 4096;
    const auto t0 = std::chrono::steady_clock::now();
    const auto phi = Density::sample(G, [](double x) { return 1.0 + 0.5 * std::sin(2.0 * kPi * x); });
    const double e1 = l1_distance(push(doubling_map(), phi), Density::uniform(G));
    std::vector<double> step(G);
    for (std::size_t i = 0; i < G; ++i) step[i] = i < G / 2 ? 1.2 : 0.8;
    const double e2 = l1_distance(push(affine_natural(2.5), Density::uniform(G)), Density::from_samples(step));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {e1 <= 1e-4 && e2 <= 4.0 / G && secs < 1.0,
            fmt("doubling err %.3g <= 1e-4, slope-2.5 step err %.3g <= %.3g, %.3f s < 1 s", e1, e2, 4.0 / G, secs)};
}

Verdict ac2() {
    const auto rep = verify_ly(builtin_maps(), 100, 50.0, std::size_t{1} << 14, 2024);
    std::string d = fmt("%zu violations over %zu maps x 100 trials;", rep.violations, rep.checks.size());
    for (const auto& c : rep.checks) d += fmt(" %s worst margin %.3g", c.name.c_str(), c.worst_margin);
    return {rep.violations == 0, d};
}

Verdict ac3() {
    MapSpec spec;
    spec.preset = "two-slope-wrap-natural";
    const auto family = parameter_family(spec, "offset", 0.0, 0.2);
    const auto rep = absorb(family, 200.0, 25.0, 20, 8192, 11, 0.05);
    const bool ok = rep.family.lambda0 == 2.5 && rep.tau == 17 && rep.pass && rep.runs.size() == 20;
    return {ok, fmt("lambda0 %.3g, A0 %.3g, tau %zu (expect 17), worst final variation %.4g <= %.4g over %zu seeds",
                    rep.family.lambda0, rep.family.A0, rep.tau, rep.worst_final, 25.0 * 1.05, rep.runs.size())};
}

Verdict ac4() {
    const auto g = slope_two_branch(3.0);
    const auto rep = positivity_horizon(g, 10.0, 0.0);
    // Minimal depth with every cylinder shorter than 1/(2 a*) = 0.05.
    std::size_t n1_expected = 1;
    for (double len = 0.5; !(len < 0.05); len /= 3.0) ++n1_expected;
    std::size_t s_max = 0;
    for (const auto& e : rep.s_table) s_max = std::max(s_max, e.escape.s);
    const double kappa0 = 0.5 * std::pow(3.0, -static_cast<double>(rep.n0));
    bool ok = rep.N == 1 && rep.n1 == n1_expected && rep.s0 == s_max && rep.n0 == rep.s0 + rep.N &&
              rep.kappa0 == kappa0;

    const std::size_t G = 4096;
    const double grid_factor = 1.0 - 10.0 / static_cast<double>(G);
    Rng rng(404);
    double worst_fixed = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
        auto phi = random_bv_density(G, 10.0, rng);
        for (std::size_t i = 0; i < rep.n0; ++i) phi = push(g, phi);
        worst_fixed = std::min(worst_fixed, min_value(phi) / kappa0);
    }
    ok = ok && worst_fixed >= grid_factor;

    const double eps = 0.01;
    const double kappa_eps = 0.5 * std::pow(3.0 + eps, -static_cast<double>(rep.n0));
    double worst_nbhd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
        Scenario s;
        s.kind = ScenarioKind::neighborhood;
        s.epsilon = eps;
        s.radii = default_radii(eps);
        s.n_max = rep.n0;
        s.seed = 500 + static_cast<std::uint64_t>(k);
        const auto maps = build_sequence(s);
        auto phi = random_bv_density(G, 10.0, rng);
        for (const auto& f : maps) phi = push(f, phi);
        worst_nbhd = std::min(worst_nbhd, min_value(phi) / kappa_eps);
    }
    ok = ok && worst_nbhd >= grid_factor;
    return {ok, fmt("N %zu, n1 %zu (depth 3 cylinders are 1/18 >= 1/20), s0 %zu, n0 %zu, kappa0 %.6g; "
                    "min/kappa0 %.4g, neighborhood min/kappa_eps %.4g (floor %.4g)",
                    rep.N, rep.n1, rep.s0, rep.n0, rep.kappa0, worst_fixed, worst_nbhd, grid_factor)};
}

json decay_config() {
    return json{{"schema_version", 1},
                {"name", "slope3-neighborhood"},
                {"kind", "neighborhood"},
                {"map", "slope-3"},
                {"epsilon", 0.01},
                {"grid", 8192},
                {"n_max", 40},
                {"seed", 5},
                {"phi", {{"preset", "sine"}, {"noise", {{"pieces", 16}, {"amplitude", 0.3}}}}},
                {"psi", {{"preset", "uniform"}}}};
}

Verdict ac5() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_scenario(parse_scenario(decay_config()), {});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.exit_code != 0 || !r.fit || !r.certificate || !r.bounds) {
        return {false, "run failed: " + r.message};
    }
    const bool ok = r.fit->R2 >= 0.98 && r.fit->Lambda_emp < 1.0 && r.certificate->pass && secs < 30.0;
    return {ok, fmt("R2 %.4f >= 0.98, Lambda_emp %.4f < 1, certify %s (max ratio %.3g, kappa %.4g, block %zu), "
                    "%.2f s < 30 s",
                    r.fit->R2, r.fit->Lambda_emp, r.certificate->pass ? "pass" : "fail",
                    r.certificate->max_ratio, r.bounds->kappa, r.bounds->block, secs)};
}

json curve_config(double factor) {
    return json{{"schema_version", 1},
                {"name", "slope-curve"},
                {"kind", "curve-driven"},
                {"grid", 4096},
                {"seed", 9},
                {"curve",
                 {{"family", "slope"},
                  {"a", 0.0},
                  {"b", 1.0},
                  {"probe_intervals", 32},
                  {"epsilon_rule", 0.05},
                  {"delta_factor", factor}}},
                {"phi", {{"preset", "sine"}}},
                {"psi", {{"preset", "uniform"}}}};
}

Verdict ac6() {
    const auto r = run_scenario(parse_scenario(curve_config(1.0)), {});
    if (r.exit_code != 0 || !r.ledger || !r.certificate || !r.bounds || !r.bounds->delta0) {
        return {false, "run failed: " + r.message};
    }
    const double delta0 = *r.bounds->delta0;
    const std::size_t cap = static_cast<std::size_t>(std::min(std::ceil(1.0 / delta0), 1e4));
    const std::size_t steps = r.ledger->steps.size() - 1;
    const double final_d = r.ledger->steps.back().l1_distance;
    const int coarse = run_scenario(parse_scenario(curve_config(2.0)), {}).exit_code;
    const bool ok = r.certificate->pass && final_d <= 1e-6 && steps <= cap && coarse == 2;
    return {ok, fmt("delta0 %.6g, %zu steps <= %zu, certify %s, final L1 %.3g <= 1e-6, 2*delta0 exit %d (expect 2)",
                    delta0, steps, cap, r.certificate->pass ? "pass" : "fail", final_d, coarse)};
}

Verdict ac7() {
    json j{{"schema_version", 1},
           {"name", "sine-smooth"},
           {"kind", "smooth"},
           {"map", "smooth-sine"},
           {"grid", 4096},
           {"n_max", 200},
           {"seed", 3},
           {"phi", {{"preset", "sine"}, {"k", 2}, {"amplitude", 0.5}}},
           {"psi", {{"preset", "uniform"}}}};
    auto s = parse_scenario(j);
    const auto phi = build_density(s.phi, s.grid, s.seed, 1);
    const auto psi = build_density(s.psi, s.grid, s.seed, 2);
    auto plan = plan_scenario(s, phi, psi);
    const double L_star = plan.bounds.L_star;
    const double eps = plan.params.eps_loc;
    const std::size_t tau = plan.bounds.tau;

    double at_tau = -1.0;
    double worst_post = 0.0;
    std::size_t post_checks = 0;
    plan.params.observer = [&](const StepEvent& e) {
        if (e.stage == StepStage::pushed && e.n == tau) {
            at_tau = std::max(ratio_class_L(e.phi_hat, eps), ratio_class_L(e.psi_hat, eps));
        }
        if (e.stage == StepStage::subtracted) {
            worst_post = std::max({worst_post, ratio_class_L(e.phi_hat, eps), ratio_class_L(e.psi_hat, eps)});
            ++post_checks;
        }
    };
    std::size_t blocks = 0;
    bool certified = false;
    try {
        const auto ledger = run_coupled(plan.maps, phi, psi, plan.params);
        for (const auto& b : ledger.blocks) blocks += b.complete ? 1 : 0;
        certified = certify(ledger, plan.bounds).pass;
    } catch (const std::exception& e) {
        return {false, std::string("run failed: ") + e.what()};
    }
    const bool ok = at_tau >= 0.0 && at_tau <= L_star && post_checks > 0 && worst_post <= 2.0 * L_star &&
                    blocks >= 30 && certified;
    return {ok, fmt("L* %.4g, tau %zu, ratio constant at tau %.4g <= L*, post-subtraction max %.4g <= %.4g "
                    "over %zu subtractions, %zu complete blocks >= 30, certify %s",
                    L_star, tau, at_tau, worst_post, 2.0 * L_star, post_checks, blocks,
                    certified ? "pass" : "fail")};
}

Verdict ac8() {
    const std::size_t G = 8192;
    Rng rng(808);
    bool ok = true;
    std::string d;
    for (const auto& m : builtin_maps()) {
        const auto phi = random_lipschitz_density(G, rng);
        const double d512 = backend_consistency(m.map, phi, 512);
        const double d1024 = backend_consistency(m.map, phi, 1024);
        const bool bound = d512 <= 4.0 / 512;
        const bool halves = d512 <= kDistanceFloor || d1024 <= 0.75 * d512;
        ok = ok && bound && halves;
        d += fmt(" %s %.3g -> %.3g;", m.name.c_str(), d512, d1024);
    }
    return {ok, "B=512 bound " + fmt("%.4g", 4.0 / 512) + ", halving factor 0.75:" + d};
}

Verdict ac9() {
    bool ok = true;
    std::string d;
    for (const auto& cfg : {decay_config(), curve_config(1.0)}) {
        const auto s = parse_scenario(cfg);
        const auto a = scratch(s.name + "_a");
        const auto b = scratch(s.name + "_b");
        (void)run_scenario(s, a);
        (void)run_scenario(s, b);
        const auto ca = slurp(a / "ledger.csv");
        const bool same = !ca.empty() && ca == slurp(b / "ledger.csv");
        ok = ok && same;
        d += fmt(" %s %s (%zu bytes);", s.name.c_str(), same ? "identical" : "DIFFERENT", ca.size());
        fs::remove_all(a);
        fs::remove_all(b);
    }
    return {ok, "ledger.csv reruns:" + d};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s  %s  [%.2f s]\n", name, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures;
}
