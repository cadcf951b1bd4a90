#include "memloss/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace memloss {

PushResult push_detailed(const PiecewiseMap& map, const Density& phi) {
    const std::size_t g = phi.resolution();
    const auto gd = static_cast<double>(g);
    std::vector<double> out(g, 0.0);

    // Branch-major accumulation keeps the summation order fixed. Grid
    // point i receives lift values J/G with J = i (mod G) and J/G in the
    // branch's half-open lift image [lo, hi).
    for (std::size_t b = 0; b < map.size(); ++b) {
        const auto& br = map.branch(b);
        const double lo = map.image_lo(b);
        const double hi = map.image_hi(b);
        const auto j_first = static_cast<long long>(std::ceil(lo * gd));
        const auto j_end = static_cast<long long>(std::ceil(hi * gd));
        for (long long j = j_first; j < j_end; ++j) {
            const double y = static_cast<double>(j) / gd;
            double x = br.lift_inverse(y);
            if (x >= br.v) x = std::nextafter(br.v, br.u);
            const long long m = j % static_cast<long long>(g);
            const auto idx = static_cast<std::size_t>(m < 0 ? m + static_cast<long long>(g) : m);
            out[idx] += phi.value_at(x) / std::fabs(br.d1(x));
        }
    }

    const double factor = trapezoid_integral(out);
    if (!(factor >= 0.5 && factor <= 2.0)) {
        throw CertificateViolation("push: renormalization factor " + std::to_string(factor) +
                                   " outside [0.5, 2]");
    }
    for (double& v : out) v /= factor;
    return {Density::from_normalized_samples(std::move(out)), factor};
}

Density push(const PiecewiseMap& map, const Density& phi) {
    return push_detailed(map, phi).density;
}

std::vector<Density> push_sequence(std::span<const PiecewiseMap> maps, const Density& phi) {
    if (maps.empty()) throw PreconditionError("push_sequence: empty map list");
    std::vector<Density> out;
    out.reserve(maps.size());
    const Density* current = &phi;
    for (const auto& f : maps) {
        out.push_back(push(f, *current));
        current = &out.back();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Ulam
// ---------------------------------------------------------------------------

UlamMatrix::UlamMatrix(std::size_t bins, std::vector<double> entries)
    : bins_(bins), entries_(std::move(entries)) {
    if (entries_.size() != bins_ * bins_) throw PreconditionError("UlamMatrix: size mismatch");
}

double UlamMatrix::column_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < bins_; ++i) s += (*this)(i, j);
    return s;
}

std::vector<double> UlamMatrix::apply(std::span<const double> masses) const {
    if (masses.size() != bins_) throw PreconditionError("UlamMatrix::apply: size mismatch");
    std::vector<double> out(bins_, 0.0);
    for (std::size_t j = 0; j < bins_; ++j) {
        const double m = masses[j];
        if (m == 0.0) continue;
        const double* col = entries_.data() + j * bins_;
        for (std::size_t i = 0; i < bins_; ++i) out[i] += col[i] * m;
    }
    return out;
}

UlamMatrix ulam_matrix(const PiecewiseMap& map, std::size_t bins) {
    if (bins < 2) throw PreconditionError("ulam_matrix: need at least 2 bins");
    const auto bd = static_cast<double>(bins);
    std::vector<double> e(bins * bins, 0.0);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return e[j * bins + i]; };
    auto bin_of = [&](long long k) {
        long long m = k % static_cast<long long>(bins);
        return static_cast<std::size_t>(m < 0 ? m + static_cast<long long>(bins) : m);
    };

    constexpr int kQuad = 64;
    for (std::size_t j = 0; j < bins; ++j) {
        const double a = static_cast<double>(j) / bd;
        const double b = static_cast<double>(j + 1) / bd;
        for (std::size_t bi = 0; bi < map.size(); ++bi) {
            const auto& br = map.branch(bi);
            const double p = std::max(a, br.u);
            const double q = std::min(b, br.v);
            if (!(q > p)) continue;
            if (br.form == BranchForm::affine) {
                const double y0 = br.lift(p);
                const double y1 = br.lift(q);
                for (auto k = static_cast<long long>(std::floor(y0 * bd));
                     static_cast<double>(k) / bd < y1; ++k) {
                    const double lo = std::max(y0, static_cast<double>(k) / bd);
                    const double hi = std::min(y1, static_cast<double>(k + 1) / bd);
                    if (hi > lo) at(bin_of(k), j) += (hi - lo) / br.slope * bd;
                }
            } else {
                const double w = (q - p) * bd / kQuad;
                for (int s = 0; s < kQuad; ++s) {
                    const double x = p + (q - p) * (s + 0.5) / kQuad;
                    const double y = wrap01(br.lift(x));
                    auto k = static_cast<long long>(std::floor(y * bd));
                    at(bin_of(k), j) += w;
                }
            }
        }
    }

    UlamMatrix u(bins, std::move(e));
    for (std::size_t j = 0; j < bins; ++j) {
        if (std::fabs(u.column_sum(j) - 1.0) > 1e-8) {
            throw CertificateViolation("ulam_matrix: column " + std::to_string(j) +
                                       " sums to " + std::to_string(u.column_sum(j)));
        }
    }
    return u;
}

std::vector<double> ulam_push(const UlamMatrix& u, std::span<const double> masses) {
    return u.apply(masses);
}

std::vector<double> bin_averages(const Density& phi, std::size_t bins) {
    const std::size_t g = phi.resolution();
    if (bins == 0 || g % bins != 0) throw PreconditionError("bin_averages: bins must divide G");
    const std::size_t r = g / bins;
    std::vector<double> avg(bins, 0.0);
    for (std::size_t j = 0; j < bins; ++j) {
        double s = 0.5 * (phi[j * r] + phi[((j + 1) * r) % g]);
        for (std::size_t t = 1; t < r; ++t) s += phi[j * r + t];
        avg[j] = s / static_cast<double>(r);
    }
    return avg;
}

double backend_consistency(const PiecewiseMap& map, const Density& phi, std::size_t bins) {
    const auto pushed = bin_averages(push(map, phi), bins);
    auto masses = bin_averages(phi, bins);
    const auto bd = static_cast<double>(bins);
    for (double& m : masses) m /= bd;
    const auto ulam = ulam_push(ulam_matrix(map, bins), masses);
    double d = 0.0;
    for (std::size_t i = 0; i < bins; ++i) d += std::fabs(pushed[i] - ulam[i] * bd);
    return d / bd;
}

}  // namespace memloss
