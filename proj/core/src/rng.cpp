#include "memloss/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "memloss/errors.hpp"

namespace memloss {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<double> random_steps(std::size_t resolution, std::size_t pieces, double lo, double hi,
                                 Rng& rng) {
    if (pieces < 1) throw PreconditionError("random_steps: need at least one piece");
    std::vector<double> cuts(pieces - 1);
    for (double& c : cuts) c = rng.uniform();
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> levels(pieces);
    for (double& l : levels) l = rng.uniform(lo, hi);

    std::vector<double> out(resolution);
    std::size_t piece = 0;
    for (std::size_t i = 0; i < resolution; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(resolution);
        while (piece < cuts.size() && cuts[piece] <= x) ++piece;
        out[i] = levels[piece];
    }
    return out;
}

Density random_bv_density(std::size_t resolution, double target, Rng& rng) {
    if (!(target > 0.0)) throw PreconditionError("random_bv_density: target must be positive");
    const auto pieces = static_cast<std::size_t>(3.0 * target) + 4;
    const auto phi = normalize(random_steps(resolution, pieces, 0.0, 1.0, rng));
    const double v = variation(phi);
    if (v <= target) return phi;
    // (1 - w) * phi + w has variation (1 - w) * v and unit integral.
    const double keep = target / v;
    std::vector<double> mixed(phi.samples().begin(), phi.samples().end());
    for (double& s : mixed) s = keep * s + (1.0 - keep);
    return normalize(std::move(mixed));
}

Density random_lipschitz_density(std::size_t resolution, Rng& rng, std::size_t modes,
                                 double amplitude) {
    std::vector<double> coef(modes);
    std::vector<double> phase(modes);
    for (std::size_t k = 0; k < modes; ++k) {
        coef[k] = rng.uniform(0.0, amplitude / static_cast<double>(modes));
        phase[k] = rng.uniform();
    }
    return Density::sample(resolution, [&](double x) {
        double s = 1.0;
        for (std::size_t k = 0; k < modes; ++k) {
            s += coef[k] * std::sin(2.0 * std::numbers::pi * (static_cast<double>(k + 1) * x + phase[k]));
        }
        return s;
    });
}

}  // namespace memloss
