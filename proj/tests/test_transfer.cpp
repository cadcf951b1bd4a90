#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "memloss/density.hpp"
#include "memloss/errors.hpp"
#include "memloss/experiments.hpp"
#include "memloss/rng.hpp"
#include "memloss/transfer.hpp"

using namespace memloss;

namespace {

constexpr double kPi = std::numbers::pi;

Density sine(std::size_t g, int k = 1) {
    return Density::sample(g, [=](double x) { return 1.0 + 0.5 * std::sin(2.0 * kPi * k * x); });
}

Density two_level(std::size_t g) {
    std::vector<double> v(g);
    for (std::size_t i = 0; i < g; ++i) v[i] = i < g / 2 ? 1.2 : 0.8;
    v[0] = 1.0;
    v[g / 2] = 1.0;
    return Density::from_samples(std::move(v));
}

}  // namespace

TEST(Push, DoublingKeepsUniform) {
    const auto out = push(doubling_map(), Density::uniform(1024));
    for (double s : out.samples()) EXPECT_NEAR(s, 1.0, 1e-14);
}

TEST(Push, DoublingAnnihilatesFirstMode) {
    EXPECT_LE(l1_distance(push(doubling_map(), sine(4096)), Density::uniform(4096)), 1e-4);
}

TEST(Push, SlopeTwoPointFiveUniformToStep) {
    const std::size_t G = 4096;
    const auto out = push(affine_natural(2.5), Density::uniform(G));
    for (std::size_t i = 1; i < G; ++i) {
        if (i == G / 2) continue;
        EXPECT_NEAR(out[i], i < G / 2 ? 1.2 : 0.8, 1e-9) << i;
    }
    EXPECT_LE(l1_distance(out, two_level(G)), 4.0 / G);
}

TEST(Push, RenormFactorNearOne) {
    const auto r = push_detailed(slope_two_branch(3.0, 0.003), sine(2048));
    EXPECT_NEAR(r.renorm_factor, 1.0, 1e-3);
}

TEST(PushSequence, DoublingTwice) {
    const std::vector<PiecewiseMap> maps{doubling_map(), doubling_map()};
    const auto out = push_sequence(maps, sine(4096, 2));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_LE(l1_distance(out[0], sine(4096, 1)), 1e-4);
    EXPECT_LE(l1_distance(out[1], Density::uniform(4096)), 1e-4);
}

TEST(PushSequence, EmptyListRejected) {
    EXPECT_THROW((void)push_sequence({}, sine(256)), PreconditionError);
}

TEST(PushSequence, ComposesSinglePushes) {
    const auto f = affine_natural(2.5);
    const std::vector<PiecewiseMap> maps{f, f};
    const auto out = push_sequence(maps, Density::uniform(2048));
    EXPECT_EQ(out[1], push(f, push(f, Density::uniform(2048))));
}

TEST(Ulam, DoublingTwoBins) {
    const auto u = ulam_matrix(doubling_map(), 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(u(i, j), 0.5, 1e-15);
}

TEST(Ulam, SlopeThreeThreeBins) {
    const auto u = ulam_matrix(slope_two_branch(3.0), 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(u(i, j), 1.0 / 3.0, 1e-12);
}

TEST(Ulam, ColumnStochastic) {
    for (const auto& m : builtin_maps()) {
        const auto u = ulam_matrix(m.map, 64);
        for (std::size_t j = 0; j < 64; ++j) EXPECT_NEAR(u.column_sum(j), 1.0, 1e-12) << m.name;
        const std::vector<double> masses(64, 1.0 / 64);
        const auto out = ulam_push(u, masses);
        EXPECT_NEAR(std::accumulate(out.begin(), out.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(Ulam, SineBranchesColumnStochastic) {
    const auto u = ulam_matrix(smooth_sine_map(2.0, 0.05), 32);
    for (std::size_t j = 0; j < 32; ++j) EXPECT_NEAR(u.column_sum(j), 1.0, 1e-9);
}

TEST(BackendConsistency, DoublingUniform) {
    for (std::size_t b : {4u, 64u, 512u}) {
        EXPECT_LE(backend_consistency(doubling_map(), Density::uniform(8192), b), 1e-10);
    }
}

TEST(BackendConsistency, SlopeTwoPointFiveUniform) {
    EXPECT_LE(backend_consistency(affine_natural(2.5), Density::uniform(8192), 512), 4.0 / 512);
}

TEST(BackendConsistency, RejectsNonDividingBins) {
    EXPECT_THROW((void)backend_consistency(doubling_map(), Density::uniform(1024), 3), PreconditionError);
}

TEST(PushProperties, PreservesMassAndPositivity) {
    Rng rng(21);
    for (const auto& m : builtin_maps()) {
        for (int k = 0; k < 5; ++k) {
            const auto phi = random_bv_density(2048, 20.0, rng);
            const auto r = push_detailed(m.map, phi);
            EXPECT_NEAR(r.renorm_factor, 1.0, 0.05) << m.name;
            EXPECT_NEAR(r.density.integral(), 1.0, 1e-12);
            EXPECT_GE(min_value(r.density), 0.0);
        }
    }
}

TEST(PushProperties, LinearOnConvexCombinations) {
    Rng rng(22);
    const auto f = slope_two_branch(3.0, 0.002);
    const auto a = random_lipschitz_density(2048, rng);
    const auto b = random_lipschitz_density(2048, rng);
    std::vector<double> mix(2048);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 0.3 * a[i] + 0.7 * b[i];
    const auto pm = push(f, Density::from_samples(mix));
    const auto pa = push(f, a);
    const auto pb = push(f, b);
    for (std::size_t i = 0; i < mix.size(); ++i) EXPECT_NEAR(pm[i], 0.3 * pa[i] + 0.7 * pb[i], 1e-6);
}

TEST(PushProperties, L1Contraction) {
    Rng rng(23);
    for (const auto& m : builtin_maps()) {
        const auto a = random_bv_density(4096, 10.0, rng);
        const auto b = random_bv_density(4096, 10.0, rng);
        EXPECT_LE(l1_distance(push(m.map, a), push(m.map, b)), l1_distance(a, b) + 20.0 / 4096) << m.name;
    }
}
