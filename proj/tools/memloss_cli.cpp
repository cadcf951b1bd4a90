// memloss: command-line front end for the memory-loss laboratory.
//
//   memloss <subcommand> [--config PATH] [--out DIR] [--grid G] [--seed S] [--jobs J]
//
// Exit codes: 0 success, 1 certificate violation or failed check, 2 configuration error.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "memloss/covering.hpp"
#include "memloss/errors.hpp"
#include "memloss/experiments.hpp"
#include "memloss/report_io.hpp"
#include "memloss/scenario.hpp"

namespace fs = std::filesystem;
using memloss::ojson;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::size_t> grid;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
};

json load_config(const Options& o, bool required) {
    if (o.config.empty()) {
        if (required) throw memloss::ConfigError("--config is required for this subcommand");
        return json{{"schema_version", memloss::kSchemaVersion}};
    }
    auto j = memloss::read_json(o.config);
    if (!j.is_object()) throw memloss::ConfigError("config root must be an object");
    if (j.value("schema_version", -1) != memloss::kSchemaVersion) {
        throw memloss::ConfigError("schema_version must be " + std::to_string(memloss::kSchemaVersion));
    }
    return j;
}

void apply_overrides(json& j, const Options& o) {
    if (o.grid) j["grid"] = *o.grid;
    if (o.seed) j["seed"] = *o.seed;
}

memloss::MapSpec map_from(const json& j, const char* key, const std::string& fallback) {
    json wrapper{{"schema_version", memloss::kSchemaVersion},
                 {"map", j.contains(key) ? j.at(key) : json(fallback)}};
    return memloss::parse_scenario(wrapper).map;
}

void emit(const Options& o, const std::string& file, const ojson& report) {
    std::cout << report.dump(2) << '\n';
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        memloss::write_json(fs::path(o.out) / file, report);
    }
}

// ---------------------------------------------------------------------------

int cmd_analyze_map(const Options& o) {
    const auto cfg = load_config(o, false);
    const auto spec = map_from(cfg, "map", "slope-3");
    const auto f = spec.build();
    ojson rep;
    rep["map"] = memloss::describe(f);
    ojson branches = ojson::array();
    for (const auto& b : f.branches()) branches.push_back(memloss::to_json(b));
    rep["branches"] = std::move(branches);
    rep["analysis"] = memloss::to_json(memloss::analyze(f));
    rep["marked_gap"] = memloss::marked_gap(f);
    if (cfg.contains("reference")) {
        const auto g = map_from(cfg, "reference", "slope-3").build();
        const auto d = memloss::neighborhood_distance(f, g);
        rep["neighborhood_distance"] = d ? ojson(*d) : ojson("incomparable");
    }
    emit(o, "analysis.json", rep);
    return 0;
}

int cmd_verify_ly(const Options& o) {
    auto cfg = load_config(o, false);
    apply_overrides(cfg, o);
    std::vector<memloss::NamedMap> maps;
    if (cfg.contains("maps")) {
        for (const auto& m : cfg.at("maps")) {
            const auto spec = map_from(json{{"map", m}}, "map", "");
            maps.push_back({spec.preset, spec.build()});
        }
    } else {
        maps = memloss::builtin_maps();
    }
    const auto rep = memloss::verify_ly(maps, cfg.value("trials", std::size_t{100}),
                                        cfg.value("max_variation", 50.0),
                                        cfg.value("grid", std::size_t{1} << 14),
                                        cfg.value("seed", std::uint64_t{7}));
    ojson j;
    j["violations"] = rep.violations;
    ojson checks = ojson::array();
    for (const auto& c : rep.checks) {
        checks.push_back({{"map", c.name}, {"lambda", c.lambda}, {"A", c.A}, {"trials", c.trials},
                          {"violations", c.violations}, {"worst_margin", c.worst_margin}});
    }
    j["checks"] = std::move(checks);
    emit(o, "ly.json", j);
    return rep.violations == 0 ? 0 : 1;
}

int cmd_absorb(const Options& o) {
    auto cfg = load_config(o, false);
    apply_overrides(cfg, o);
    const json fam = cfg.value("family", json::object());
    const auto spec = map_from(fam, "map", "two-slope-wrap-natural");
    const auto range = fam.value("range", std::vector<double>{0.0, 0.2});
    if (range.size() != 2 || !(range[1] >= range[0])) throw memloss::ConfigError("family.range must be [lo, hi]");
    const auto family = memloss::parameter_family(spec, fam.value("parameter", std::string("offset")),
                                                  range[0], range[1]);
    const auto rep = memloss::absorb(family, cfg.value("a", 200.0), cfg.value("a_star", 25.0),
                                     cfg.value("seeds", std::size_t{20}),
                                     cfg.value("grid", std::size_t{1} << 13),
                                     cfg.value("seed", std::uint64_t{11}), cfg.value("tolerance", 0.05));
    ojson j;
    j["family"] = memloss::to_json(rep.family);
    j["a"] = rep.a;
    j["a_star"] = rep.a_star;
    j["tau"] = rep.tau;
    j["tolerance"] = rep.tolerance;
    j["worst_final"] = rep.worst_final;
    j["pass"] = rep.pass;
    ojson runs = ojson::array();
    for (const auto& r : rep.runs) {
        runs.push_back({{"seed", r.seed}, {"initial_variation", r.initial_variation},
                        {"variations", r.variations}});
    }
    j["runs"] = std::move(runs);
    emit(o, "absorb.json", j);
    return rep.pass ? 0 : 1;
}

int cmd_envelope_check(const Options& o) {
    const auto cfg = load_config(o, false);
    const auto g = map_from(cfg, "map", "slope-3").build();
    const auto rep = memloss::envelope_check(g, cfg.value("n_max", std::size_t{16}), cfg.value("delta", 0.0));
    ojson j;
    j["map"] = memloss::describe(g);
    j["enveloping"] = rep.N.has_value();
    j["N"] = rep.N ? ojson(*rep.N) : ojson(nullptr);
    j["n_max"] = rep.n_max;
    j["delta"] = rep.delta;
    j["overcover"] = rep.overcover;
    emit(o, "envelope.json", j);
    return 0;
}

int cmd_covering(const Options& o) {
    const auto cfg = load_config(o, false);
    const auto g = map_from(cfg, "map", "slope-3").build();
    const auto rep = memloss::positivity_horizon(g, cfg.value("a_star", 10.0), cfg.value("epsilon", 0.0),
                                                 cfg.value("n_max", std::size_t{16}));
    emit(o, "covering.json", memloss::to_json(rep));
    return 0;
}

// ---------------------------------------------------------------------------

enum class ScenarioCommand { couple, decay, drive_curve };

int run_scenarios(const Options& o, ScenarioCommand cmd) {
    auto cfg = load_config(o, true);
    std::vector<json> raw;
    if (cfg.contains("scenarios")) {
        for (auto s : cfg.at("scenarios")) {
            if (!s.contains("schema_version")) s["schema_version"] = memloss::kSchemaVersion;
            raw.push_back(std::move(s));
        }
    } else {
        raw.push_back(cfg);
    }

    std::vector<memloss::Scenario> scenarios;
    std::set<std::string> names;
    for (auto& j : raw) {
        apply_overrides(j, o);
        auto s = memloss::parse_scenario(j);
        if (cmd == ScenarioCommand::drive_curve && s.kind != memloss::ScenarioKind::curve_driven) {
            throw memloss::ConfigError("drive-curve needs a curve-driven scenario");
        }
        if (cmd == ScenarioCommand::decay && s.kind == memloss::ScenarioKind::curve_driven) {
            throw memloss::ConfigError("decay runs fixed-map, neighborhood or smooth scenarios");
        }
        if (!names.insert(s.name).second) throw memloss::ConfigError("duplicate scenario name " + s.name);
        scenarios.push_back(std::move(s));
    }

    const bool nested = scenarios.size() > 1;
    std::vector<memloss::RunResult> results(scenarios.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < scenarios.size(); i = next++) {
            fs::path dir;
            if (!o.out.empty()) dir = nested ? fs::path(o.out) / scenarios[i].name : fs::path(o.out);
            results[i] = memloss::run_scenario(scenarios[i], dir);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(o.jobs, 1, scenarios.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int code = 0;
    ojson all = ojson::array();
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto& r = results[i];
        ojson j;
        j["name"] = scenarios[i].name;
        j["exit_code"] = r.exit_code;
        j["message"] = r.message;
        if (r.bounds) j["bounds"] = memloss::to_json(*r.bounds);
        if (r.fit || r.ledger) j["fit"] = memloss::to_json(r.fit);
        if (r.certificate) j["certify"] = memloss::to_json(*r.certificate);
        if (r.ledger) j["final_l1_distance"] = r.ledger->steps.back().l1_distance;
        all.push_back(std::move(j));
        code = std::max(code, r.exit_code);
    }
    std::cout << (nested ? all : all.front()).dump(2) << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exponential memory loss laboratory for expanding circle maps"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Scenario or experiment JSON file");
        sub->add_option("--out", opt.out, "Output directory");
        sub->add_option("--grid", opt.grid, "Grid resolution G (power of two)");
        sub->add_option("--seed", opt.seed, "64-bit seed");
        sub->add_option("--jobs", opt.jobs, "Parallel scenarios")->check(CLI::PositiveNumber);
    };

    struct Entry {
        const char* name;
        const char* help;
        std::function<int()> run;
    };
    const std::vector<Entry> entries = {
        {"analyze-map", "Branch structure and analytic constants of a map", [&] { return cmd_analyze_map(opt); }},
        {"verify-ly", "Lasota-Yorke inequality on random BV densities", [&] { return cmd_verify_ly(opt); }},
        {"absorb", "Absorption time and empirical variation decay", [&] { return cmd_absorb(opt); }},
        {"envelope-check", "Enveloping time and overcovering", [&] { return cmd_envelope_check(opt); }},
        {"covering", "Positivity horizon: N, n1, escape times, n0, kappa", [&] { return cmd_covering(opt); }},
        {"decay", "Run a coupling scenario and fit the decay rate",
         [&] { return run_scenarios(opt, ScenarioCommand::decay); }},
        {"drive-curve", "Run a curve-driven scenario",
         [&] { return run_scenarios(opt, ScenarioCommand::drive_curve); }},
        {"couple", "Run any scenario through the coupling engine",
         [&] { return run_scenarios(opt, ScenarioCommand::couple); }},
    };
    std::vector<CLI::App*> subs;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return entries[i].run();
        }
    } catch (const memloss::CertificateViolation& e) {
        std::cerr << "certificate violation: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
