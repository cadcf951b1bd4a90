#include "memloss/density.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace memloss {

namespace {

void check_resolution(std::size_t g) {
    if (g < 2 || !std::has_single_bit(g)) {
        throw PreconditionError("Density: resolution must be a power of two >= 2, got " +
                                std::to_string(g));
    }
}

}  // namespace

Density Density::from_samples(std::vector<double> samples) {
    check_resolution(samples.size());
    for (double v : samples) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw PreconditionError("Density: samples must be finite and nonnegative");
        }
    }
    const double total = trapezoid_integral(samples);
    if (!(total > 0.0)) throw PreconditionError("Density: integral must be positive");
    for (double& v : samples) v /= total;
    return Density(std::move(samples));
}

Density Density::from_normalized_samples(std::vector<double> samples) {
    check_resolution(samples.size());
    for (double v : samples) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw PreconditionError("Density: samples must be finite and nonnegative");
        }
    }
    if (std::fabs(trapezoid_integral(samples) - 1.0) > 1e-9) {
        throw PreconditionError("Density: samples are not normalized");
    }
    return Density(std::move(samples));
}

Density Density::uniform(std::size_t resolution) {
    check_resolution(resolution);
    return Density(std::vector<double>(resolution, 1.0));
}

Density Density::sample(std::size_t resolution, const std::function<double(double)>& fn) {
    check_resolution(resolution);
    std::vector<double> s(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        s[i] = fn(static_cast<double>(i) / static_cast<double>(resolution));
    }
    return from_samples(std::move(s));
}

double Density::value_at(double x) const {
    const auto g = static_cast<double>(samples_.size());
    double t = (x - std::floor(x)) * g;
    auto i = static_cast<std::size_t>(t);
    if (i >= samples_.size()) i = samples_.size() - 1;
    const double w = t - static_cast<double>(i);
    const std::size_t j = (i + 1) % samples_.size();
    return samples_[i] + w * (samples_[j] - samples_[i]);
}

double Density::integral() const { return trapezoid_integral(samples_); }

double trapezoid_integral(std::span<const double> samples) {
    if (samples.size() < 2) throw PreconditionError("trapezoid_integral: need G >= 2");
    double sum = 0.0;
    for (double v : samples) sum += v;
    return sum / static_cast<double>(samples.size());
}

Density normalize(std::vector<double> samples) { return Density::from_samples(std::move(samples)); }

double l1_distance(const Density& phi, const Density& psi) {
    if (phi.resolution() != psi.resolution()) {
        throw PreconditionError("l1_distance: resolutions differ");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < phi.resolution(); ++i) sum += std::fabs(phi[i] - psi[i]);
    return sum / static_cast<double>(phi.resolution());
}

double variation(std::span<const double> s) {
    double v = 0.0;
    const std::size_t g = s.size();
    for (std::size_t i = 0; i < g; ++i) v += std::fabs(s[(i + 1) % g] - s[i]);
    return v;
}

double variation(const Density& phi) { return variation(phi.samples()); }

double min_value(const Density& phi) {
    return *std::min_element(phi.samples().begin(), phi.samples().end());
}

double ratio_class_L(const Density& phi, double eps_loc) {
    const auto s = phi.samples();
    const std::size_t g = s.size();
    if (min_value(phi) <= 0.0) return std::numeric_limits<double>::infinity();
    const double h = 1.0 / static_cast<double>(g);
    // offsets j with j*h < eps_loc, capped at half the circle
    std::size_t reach = static_cast<std::size_t>(std::ceil(eps_loc * static_cast<double>(g))) ;
    while (reach > 0 && static_cast<double>(reach) * h >= eps_loc) --reach;
    reach = std::min(reach, g / 2);
    double best = 0.0;
    for (std::size_t j = 1; j <= reach; ++j) {
        const double d = static_cast<double>(j) * h;
        for (std::size_t i = 0; i < g; ++i) {
            const double a = s[i];
            const double b = s[(i + j) % g];
            best = std::max({best, std::fabs(a / b - 1.0) / d, std::fabs(b / a - 1.0) / d});
        }
    }
    return best;
}

Density match_subtract(const Density& phi, double kappa, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw PreconditionError("match_subtract: fraction must lie in (0, 1]");
    }
    const double c = fraction * kappa;
    if (!(c > 0.0)) throw PreconditionError("match_subtract: subtracted mass must be positive");
    if (c > min_value(phi)) {
        throw PreconditionError("match_subtract: fraction*kappa exceeds min_value(phi)");
    }
    if (!(c < 1.0)) throw PreconditionError("match_subtract: fraction*kappa must be < 1");
    std::vector<double> out(phi.samples().begin(), phi.samples().end());
    const double scale = 1.0 - c;
    for (double& v : out) v = (v - c) / scale;
    return Density::from_normalized_samples(std::move(out));
}

void validate(const RatioClassParams& params) {
    if (!(params.L >= 0.0)) throw PreconditionError("RatioClassParams: L must be nonnegative");
    if (!(params.eps_loc > 0.0 && params.eps_loc < 0.25)) {
        throw PreconditionError("RatioClassParams: eps_loc must lie in (0, 1/4)");
    }
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const Density& phi) {
    os << "x,value\n";
    for (std::size_t i = 0; i < phi.resolution(); ++i) {
        os << format_double(phi.grid_point(i)) << ',' << format_double(phi[i]) << '\n';
    }
}

Density read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw PreconditionError("read_csv: empty input");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw PreconditionError("read_csv: malformed row");
        double v = 0.0;
        const char* first = line.data() + comma + 1;
        const char* last = line.data() + line.size();
        auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{}) throw PreconditionError("read_csv: bad number");
        values.push_back(v);
    }
    return Density::from_normalized_samples(std::move(values));
}

}  // namespace memloss
