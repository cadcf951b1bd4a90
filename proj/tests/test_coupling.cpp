#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "memloss/bounds.hpp"
#include "memloss/coupling.hpp"
#include "memloss/covering.hpp"
#include "memloss/errors.hpp"
#include "memloss/rng.hpp"

using namespace memloss;

namespace {

constexpr double kPi = std::numbers::pi;

Density sine(std::size_t g) {
    return Density::sample(g, [](double x) { return 1.0 + 0.5 * std::sin(2.0 * kPi * x); });
}

struct PiecewiseSetup {
    std::vector<PiecewiseMap> maps;
    CoveringReport covering;
    BoundsReport bounds;
    CouplingParams params;
};

PiecewiseSetup slope_three(std::size_t n, std::size_t G, const Density& phi, const Density& psi) {
    PiecewiseSetup s;
    s.maps.assign(n, slope_two_branch(3.0));
    const auto fam = family_constants(s.maps);
    const double a_star = default_a_star(fam.lambda0, fam.A0);
    s.covering = positivity_horizon(s.maps[0], a_star, 0.0);
    s.bounds = piecewise_report(fam, a_star, std::max(variation(phi), variation(psi)), s.covering);
    s.params = piecewise_params(s.bounds, s.covering, G);
    return s;
}

}  // namespace

TEST(RunCoupled, IdenticalDensities) {
    const auto phi = sine(2048);
    auto s = slope_three(20, 2048, phi, phi);
    const auto ledger = run_coupled(s.maps, phi, phi, s.params);
    for (const auto& r : ledger.steps) EXPECT_EQ(r.l1_distance, 0.0);
    const auto rep = certify(ledger, s.bounds);
    EXPECT_TRUE(rep.pass);
    EXPECT_EQ(rep.max_ratio, 0.0);
}

TEST(RunCoupled, DoublingSmoothMode) {
    const std::size_t G = 4096;
    const std::vector<PiecewiseMap> maps(6, doubling_map());
    const auto fam = family_constants(maps);
    const auto bounds = smooth_report(fam, 1.0);
    const auto ledger = run_coupled(maps, sine(G), Density::uniform(G), smooth_params(bounds, G));
    ASSERT_EQ(ledger.steps.size(), 7u);
    EXPECT_NEAR(ledger.steps[0].l1_distance, 1.0 / kPi, 1e-4);
    for (std::size_t n = 1; n < ledger.steps.size(); ++n) EXPECT_LE(ledger.steps[n].l1_distance, 1e-4);
    EXPECT_TRUE(certify(ledger, bounds).pass);
}

TEST(RunCoupled, ResidualMassIsGeometric) {
    const std::size_t G = 4096;
    const auto phi = sine(G);
    const auto psi = Density::uniform(G);
    auto s = slope_three(60, G, phi, psi);
    const auto ledger = run_coupled(s.maps, phi, psi, s.params);
    ASSERT_TRUE(ledger.n_wait.has_value());
    ASSERT_FALSE(ledger.blocks.empty());
    for (const auto& b : ledger.blocks) {
        if (!b.complete) continue;
        EXPECT_NEAR(b.residual_mass, std::pow(1.0 - b.kappa, static_cast<double>(b.index + 1)), 1e-12);
        EXPECT_NEAR(b.matched_mass, 1.0 - b.residual_mass, 1e-15);
        EXPECT_LE(b.l1_at_end, 2.0 * b.residual_mass + ledger.slack);
    }
    const auto rep = certify(ledger, s.bounds);
    EXPECT_TRUE(rep.pass);
    EXPECT_LE(rep.max_ratio, 1.0 + 1e-9);
}

TEST(RunCoupled, MatchingDoesNotTouchRawPair) {
    const std::size_t G = 2048;
    Rng rng(41);
    const auto phi = random_bv_density(G, 8.0, rng);
    const auto psi = Density::uniform(G);
    auto s = slope_three(30, G, phi, psi);
    const auto on = run_coupled(s.maps, phi, psi, s.params);
    s.params.matching = false;
    const auto off = run_coupled(s.maps, phi, psi, s.params);
    ASSERT_EQ(on.steps.size(), off.steps.size());
    for (std::size_t n = 0; n < on.steps.size(); ++n) EXPECT_EQ(on.steps[n].l1_distance, off.steps[n].l1_distance);
    for (const auto& b : off.blocks) EXPECT_EQ(b.matched_mass, 0.0);
}

TEST(RunCoupled, ConeAndPositivityObserved) {
    const std::size_t G = 2048;
    const auto phi = sine(G);
    const auto psi = Density::uniform(G);
    auto s = slope_three(40, G, phi, psi);
    const double a_star = *s.bounds.a_star;
    std::size_t checks = 0;
    s.params.observer = [&](const StepEvent& e) {
        if (!e.in_cone) return;
        if (e.stage == StepStage::pushed) {
            EXPECT_LE(variation(e.phi_hat), a_star / (1.0 - s.bounds.kappa) + 1e-9);
            EXPECT_LE(variation(e.psi_hat), a_star / (1.0 - s.bounds.kappa) + 1e-9);
        }
        EXPECT_NEAR(e.phi_hat.integral(), 1.0, 1e-9);
        ++checks;
    };
    (void)run_coupled(s.maps, phi, psi, s.params);
    EXPECT_GT(checks, 0u);
}

TEST(RunCoupled, PositivityFailureNamesBlock) {
    const std::size_t G = 1024;
    const auto phi = sine(G);
    const auto psi = Density::uniform(G);
    auto s = slope_three(30, G, phi, psi);
    s.params.planner = [](std::size_t) { return BlockPlan{0, 3, 0.9}; };
    try {
        (void)run_coupled(s.maps, phi, psi, s.params);
        FAIL() << "expected a certificate violation";
    } catch (const CertificateViolation& e) {
        EXPECT_NE(std::string(e.what()).find("block 0"), std::string::npos) << e.what();
    }
}

TEST(FitDecay, ExactGeometric) {
    const std::vector<double> d{1.0, 0.5, 0.25, 0.125, 0.0625};
    const auto fit = fit_decay(d);
    ASSERT_TRUE(fit.has_value());
    EXPECT_NEAR(fit->Lambda_emp, 0.5, 1e-14);
    EXPECT_NEAR(fit->R2, 1.0, 1e-14);
    EXPECT_EQ(fit->points, 5u);
}

TEST(FitDecay, Unavailable) {
    EXPECT_FALSE(fit_decay(std::vector<double>(10, 1e-13)).has_value());
    EXPECT_FALSE(fit_decay(std::vector<double>{1.0, 0.5, 0.25, 0.125}).has_value());
}

TEST(FitDecay, DoublingFourierSequence) {
    const std::size_t G = 4096;
    std::vector<double> v(G);
    for (std::size_t i = 0; i < G; ++i) {
        const double x = static_cast<double>(i) / G;
        for (int k = 0; k < 8; ++k) v[i] += std::sin(2.0 * kPi * std::ldexp(1.0, k) * x) / (1 << (k + 2));
        v[i] += 1.0;
    }
    const auto phi = Density::from_samples(v);
    const std::vector<PiecewiseMap> maps(12, doubling_map());
    const auto fam = family_constants(maps);
    const auto bounds = smooth_report(fam, 1.0);
    const auto ledger = run_coupled(maps, phi, Density::uniform(G), smooth_params(bounds, G));
    const auto d = ledger.distances();
    const auto fit = fit_decay(d, 0, 7);
    ASSERT_TRUE(fit.has_value());
    EXPECT_LE(fit->Lambda_emp, 0.51);
}

TEST(Certify, SyntheticFailure) {
    CouplingLedger ledger;
    ledger.mode = CouplingMode::piecewise;
    StepRecord r;
    r.l1_distance = 3.0;
    r.block_index = 0;
    r.envelope_value = 2.0;
    ledger.steps.push_back(r);
    BoundsReport b;
    b.mode = CouplingMode::piecewise;
    const auto rep = certify(ledger, b);
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.first_failure, std::optional<std::size_t>(0));
    EXPECT_NEAR(rep.max_ratio, 1.5, 1e-15);
}

TEST(Certify, ModeMismatch) {
    CouplingLedger ledger;
    ledger.mode = CouplingMode::smooth;
    BoundsReport b;
    b.mode = CouplingMode::piecewise;
    EXPECT_THROW((void)certify(ledger, b), PreconditionError);
}

TEST(LedgerCsv, HeaderAndRows) {
    const auto phi = sine(512);
    auto s = slope_three(5, 512, phi, Density::uniform(512));
    const auto ledger = run_coupled(s.maps, phi, Density::uniform(512), s.params);
    std::ostringstream os;
    write_ledger_csv(os, ledger);
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "n,l1_distance,variation_phi,variation_psi,min_phi,min_psi,block_index,kappa_used,"
              "residual_mass,envelope_value");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), ledger.steps.size() + 1);
}
