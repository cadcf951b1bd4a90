#include "memloss/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace memloss {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kContinuityTol = 1e-12;

// Points k/2 + phase (k integer) strictly inside (u, v).
template <typename F>
void for_each_half_period_point(double u, double v, double phase, F&& fn) {
    for (double k = std::ceil(2.0 * (u - phase)); phase + 0.5 * k < v; k += 1.0) {
        const double x = phase + 0.5 * k;
        if (x > u) fn(x);
    }
}

}  // namespace

double wrap01(double x) {
    double r = x - std::floor(x);
    // floor of a tiny negative number can produce exactly 1.0
    return r >= 1.0 ? 0.0 : r;
}

double circle_distance(double a, double b) {
    double d = std::fabs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

// ---------------------------------------------------------------------------
// BranchSpec
// ---------------------------------------------------------------------------

BranchSpec BranchSpec::affine(double u, double v, double slope, double offset) {
    return BranchSpec{u, v, BranchForm::affine, slope, offset, 0.0};
}

BranchSpec BranchSpec::sine(double u, double v, double slope, double offset, double amplitude) {
    return BranchSpec{u, v, BranchForm::sine, slope, offset, amplitude};
}

double BranchSpec::lift(double x) const {
    if (form == BranchForm::affine) return slope * x + offset;
    return slope * x + offset + amplitude * std::sin(kTwoPi * x);
}

double BranchSpec::d1(double x) const {
    if (form == BranchForm::affine) return slope;
    return slope + kTwoPi * amplitude * std::cos(kTwoPi * x);
}

double BranchSpec::d2(double x) const {
    if (form == BranchForm::affine) return 0.0;
    return -kTwoPi * kTwoPi * amplitude * std::sin(kTwoPi * x);
}

double BranchSpec::lift_inverse(double y) const {
    if (form == BranchForm::affine) {
        return std::clamp((y - offset) / slope, u, v);
    }
    double lo = u;
    double hi = v;
    const double h_lo = lift(lo);
    const double h_hi = lift(hi);
    if (y <= h_lo) return lo;
    if (y >= h_hi) return hi;

    const double tol = 1e-15 * std::max(1.0, std::fabs(y));
    double x = std::clamp((y - offset) / slope, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double r = lift(x) - y;
        if (std::fabs(r) <= tol) return x;
        if (r > 0.0) hi = x; else lo = x;
        double next = x - r / d1(x);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(x))) {
            return next;
        }
        x = next;
    }
    throw MalformedBranch("lift_inverse: no convergence on [" + std::to_string(u) + ", " +
                          std::to_string(v) + ") for y = " + std::to_string(y));
}

double BranchSpec::min_d1() const {
    if (form == BranchForm::affine) return slope;
    double m = std::min(d1(u), d1(v));
    for_each_half_period_point(u, v, 0.0, [&](double x) { m = std::min(m, d1(x)); });
    return m;
}

double BranchSpec::max_d1() const {
    if (form == BranchForm::affine) return slope;
    double m = std::max(d1(u), d1(v));
    for_each_half_period_point(u, v, 0.0, [&](double x) { m = std::max(m, d1(x)); });
    return m;
}

double BranchSpec::max_abs_d2() const {
    if (form == BranchForm::affine || amplitude == 0.0) return 0.0;
    double m = std::max(std::fabs(d2(u)), std::fabs(d2(v)));
    for_each_half_period_point(u, v, 0.25, [&](double x) { m = std::max(m, std::fabs(d2(x))); });
    return m;
}

// ---------------------------------------------------------------------------
// PiecewiseMap
// ---------------------------------------------------------------------------

PiecewiseMap::PiecewiseMap(std::vector<BranchSpec> branches) : branches_(std::move(branches)) {
    if (branches_.empty()) throw PreconditionError("PiecewiseMap: no branches");
    if (branches_.front().u != 0.0) throw PreconditionError("PiecewiseMap: first branch must start at 0");
    if (branches_.back().v != 1.0) throw PreconditionError("PiecewiseMap: last branch must end at 1");
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        auto& b = branches_[i];
        if (!(b.u < b.v)) throw PreconditionError("PiecewiseMap: empty branch domain");
        if (i + 1 < branches_.size()) {
            const double next_u = branches_[i + 1].u;
            if (std::fabs(b.v - next_u) > 1e-15) {
                throw PreconditionError("PiecewiseMap: branch domains must tile [0, 1)");
            }
            b.v = next_u;
        }
        if (!(b.slope > 0.0) || !(b.min_d1() > 0.0)) {
            throw PreconditionError("PiecewiseMap: branches must be orientation preserving");
        }
    }

    const std::size_t n = branches_.size();
    image_lo_.resize(n);
    image_hi_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        image_lo_[i] = branches_[i].lift(branches_[i].u);
        image_hi_[i] = branches_[i].lift(branches_[i].v);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t prev = (i + n - 1) % n;
        const double left = image_hi_[prev];
        const double right = image_lo_[i];
        if (circle_distance(wrap01(left), wrap01(right)) > kContinuityTol) {
            omega_.push_back(branches_[i].u);
        }
    }
    auto snap_int = [](double& y) {
        const double r = std::round(y);
        if (std::fabs(y - r) <= kContinuityTol) y = r;
    };
    for (std::size_t i = 0; i < n; ++i) {
        snap_int(image_lo_[i]);
        snap_int(image_hi_[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t next = (i + 1) % n;
        const double diff = image_hi_[i] - image_lo_[next];
        const double m = std::round(diff);
        if (std::fabs(diff - m) <= kContinuityTol) image_hi_[i] = image_lo_[next] + m;
    }
}

std::size_t PiecewiseMap::branch_index(double x) const {
    auto it = std::upper_bound(branches_.begin(), branches_.end(), x,
                               [](double value, const BranchSpec& b) { return value < b.u; });
    if (it == branches_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(branches_.begin(), it) - 1);
}

std::vector<double> PiecewiseMap::marked_points() const {
    std::vector<double> pts;
    pts.reserve(branches_.size());
    for (const auto& b : branches_) pts.push_back(b.u);
    return pts;
}

double marked_gap(const PiecewiseMap& map) {
    const auto pts = map.marked_points();
    double gap = 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double next = i + 1 < pts.size() ? pts[i + 1] : pts.front() + 1.0;
        gap = std::min(gap, next - pts[i]);
    }
    return gap;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

double eval_map(const PiecewiseMap& map, double x) {
    x = wrap01(x);
    return wrap01(map.branch(map.branch_index(x)).lift(x));
}

Derivatives eval_derivs(const PiecewiseMap& map, double x) {
    x = wrap01(x);
    const auto& b = map.branch(map.branch_index(x));
    return {b.d1(x), b.d2(x)};
}

std::vector<Preimage> inverse_branches(const PiecewiseMap& map, double y) {
    std::vector<Preimage> out;
    y = wrap01(y);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const auto& b = map.branch(i);
        const double lo = map.image_lo(i);
        const double hi = map.image_hi(i);
        for (double k = std::ceil(lo - y); y + k < hi; k += 1.0) {
            const double target = y + k;
            if (target < lo) continue;
            double x = b.lift_inverse(target);
            if (x >= b.v) x = std::nextafter(b.v, b.u);
            out.push_back({i, x, std::fabs(b.d1(x))});
        }
    }
    return out;
}

MapAnalysis analyze(const PiecewiseMap& map) {
    MapAnalysis a;
    a.lambda_min = std::numeric_limits<double>::infinity();
    a.M0 = 0.0;
    double curvature = 0.0;
    double boundary = 0.0;
    for (const auto& b : map.branches()) {
        const double lo = std::fabs(b.min_d1());
        const double hi = std::fabs(b.max_d1());
        const double d2 = b.max_abs_d2();
        a.lambda_min = std::min(a.lambda_min, lo);
        a.M0 = std::max(a.M0, hi);
        curvature = std::max(curvature, d2 / (lo * lo));
        a.C1 = std::max(a.C1, d2 / lo);
        boundary = std::max(boundary, (1.0 / lo) / b.length());
    }
    if (!(a.lambda_min > 1.0)) {
        throw PreconditionError("analyze: map is not expanding (inf |f'| <= 1)");
    }
    a.A = curvature + 2.0 * boundary;
    const auto omega = map.discontinuities();
    a.omega.assign(omega.begin(), omega.end());
    if (!a.omega.empty()) {
        double gap = 1.0;
        for (std::size_t i = 0; i < a.omega.size(); ++i) {
            const double next = i + 1 < a.omega.size() ? a.omega[i + 1] : a.omega.front() + 1.0;
            gap = std::min(gap, next - a.omega[i]);
        }
        a.d_omega = gap;
    }
    return a;
}

std::optional<double> neighborhood_distance(const PiecewiseMap& f, const PiecewiseMap& g,
                                            std::size_t grid_per_interval) {
    if (f.size() != g.size()) return std::nullopt;
    const std::size_t k = g.size();
    const auto xs = g.marked_points();
    const auto ys = f.marked_points();
    const std::size_t grid = std::max<std::size_t>(grid_per_interval, 2);

    double eps = 0.0;
    for (std::size_t i = 0; i < k; ++i) eps = std::max(eps, circle_distance(xs[i], ys[i]));

    for (std::size_t i = 0; i < k; ++i) {
        const double x0 = xs[i];
        const double x1 = i + 1 < k ? xs[i + 1] : 1.0;
        const double y0 = ys[i];
        const double y1 = i + 1 < k ? ys[i + 1] : 1.0;
        const double ratio = (y1 - y0) / (x1 - x0);
        const auto& bf = f.branch(i);
        const auto& bg = g.branch(i);
        for (std::size_t j = 0; j <= grid; ++j) {
            const double t = x0 + (x1 - x0) * static_cast<double>(j) / static_cast<double>(grid);
            const double s = y0 + (t - x0) * ratio;
            double dv = bf.lift(s) - bg.lift(t);
            dv -= std::round(dv);
            const double d1 = bf.d1(s) * ratio - bg.d1(t);
            const double d2 = bf.d2(s) * ratio * ratio - bg.d2(t);
            eps = std::max({eps, std::fabs(dv), std::fabs(d1), std::fabs(d2)});
        }
    }
    if (eps >= 0.25 * marked_gap(g)) return std::nullopt;
    return eps;
}

// ---------------------------------------------------------------------------
// Built-in maps
// ---------------------------------------------------------------------------

PiecewiseMap doubling_map() {
    return PiecewiseMap({BranchSpec::affine(0.0, 0.5, 2.0), BranchSpec::affine(0.5, 1.0, 2.0)});
}

PiecewiseMap affine_natural(double slope, double offset) {
    return natural_refinement(PiecewiseMap({BranchSpec::affine(0.0, 1.0, slope, offset)}));
}

PiecewiseMap slope_two_branch(double slope, double amplitude, double offset) {
    if (amplitude == 0.0) {
        return PiecewiseMap({BranchSpec::affine(0.0, 0.5, slope, offset),
                             BranchSpec::affine(0.5, 1.0, slope, offset)});
    }
    return PiecewiseMap({BranchSpec::sine(0.0, 0.5, slope, offset, amplitude),
                         BranchSpec::sine(0.5, 1.0, slope, offset, amplitude)});
}

PiecewiseMap smooth_sine_map(double slope, double amplitude, double offset) {
    if (amplitude == 0.0) return PiecewiseMap({BranchSpec::affine(0.0, 1.0, slope, offset)});
    return PiecewiseMap({BranchSpec::sine(0.0, 1.0, slope, offset, amplitude)});
}

PiecewiseMap two_slope_wrap(double offset) {
    return PiecewiseMap({BranchSpec::affine(0.0, 0.5, 3.0, 0.0),
                         BranchSpec::affine(0.5, 1.0, 2.5, offset)});
}

PiecewiseMap natural_refinement(const PiecewiseMap& map) {
    std::vector<BranchSpec> out;
    for (const auto& b : map.branches()) {
        const double lo = b.lift(b.u);
        const double hi = b.lift(b.v);
        double start = b.u;
        for (double m = std::floor(lo) + 1.0; m < hi - kContinuityTol; m += 1.0) {
            if (m <= lo + kContinuityTol) continue;
            const double cut = b.lift_inverse(m);
            if (cut <= start || cut >= b.v) continue;
            BranchSpec piece = b;
            piece.u = start;
            piece.v = cut;
            out.push_back(piece);
            start = cut;
        }
        BranchSpec last = b;
        last.u = start;
        out.push_back(last);
    }
    return PiecewiseMap(std::move(out));
}

std::string describe(const PiecewiseMap& map) {
    std::ostringstream os;
    os.precision(6);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const auto& b = map.branch(i);
        if (i) os << "; ";
        os << '[' << b.u << ',' << b.v << "): " << b.slope << "x";
        if (b.offset != 0.0) os << (b.offset > 0 ? "+" : "") << b.offset;
        if (b.form == BranchForm::sine) os << (b.amplitude >= 0 ? "+" : "") << b.amplitude << "sin(2pi x)";
    }
    return os.str();
}

}  // namespace memloss
