#include "memloss/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "memloss/errors.hpp"
#include "memloss/transfer.hpp"

namespace memloss {

std::string to_string(KappaSource source) {
    return source == KappaSource::theoretical ? "theoretical" : "empirical";
}

CouplingParams piecewise_params(const BoundsReport& bounds, const CoveringReport& covering,
                                std::size_t resolution) {
    if (!bounds.a_star) throw PreconditionError("piecewise_params: bounds carry no a_star");
    if (bounds.block <= covering.n0) throw PreconditionError("piecewise_params: block shorter than n0");
    CouplingParams p;
    p.mode = CouplingMode::piecewise;
    p.fraction = 1.0;
    p.cone_level = *bounds.a_star;
    p.slack = 20.0 * *bounds.a_star / static_cast<double>(resolution);
    p.planner = [plan = BlockPlan{covering.n0, bounds.block - covering.n0, bounds.kappa}](std::size_t) {
        return plan;
    };
    return p;
}

CouplingParams smooth_params(const BoundsReport& bounds, std::size_t resolution) {
    CouplingParams p;
    p.mode = CouplingMode::smooth;
    p.fraction = 0.5;
    p.cone_level = bounds.L_star;
    p.slack = 20.0 * bounds.L_star / static_cast<double>(resolution);
    p.planner = [plan = BlockPlan{0, bounds.block, bounds.kappa}](std::size_t) { return plan; };
    return p;
}

std::vector<double> CouplingLedger::distances() const {
    std::vector<double> d;
    d.reserve(steps.size());
    for (const auto& s : steps) d.push_back(s.l1_distance);
    return d;
}

namespace {

struct ActiveBlock {
    BlockRecord record;
    bool checked = false;
};

bool in_cone(const CouplingParams& p, const Density& phi, const Density& psi) {
    if (p.mode == CouplingMode::piecewise) {
        return variation(phi) <= p.cone_level && variation(psi) <= p.cone_level;
    }
    return ratio_class_L(phi, p.eps_loc) <= p.cone_level &&
           ratio_class_L(psi, p.eps_loc) <= p.cone_level;
}

}  // namespace

CouplingLedger run_coupled(std::span<const PiecewiseMap> maps, const Density& phi,
                           const Density& psi, const CouplingParams& params) {
    if (phi.resolution() != psi.resolution()) throw PreconditionError("run_coupled: grid mismatch");
    if (!params.planner) throw PreconditionError("run_coupled: no block planner");
    if (!(params.fraction > 0.0 && params.fraction <= 1.0)) {
        throw PreconditionError("run_coupled: fraction must be in (0, 1]");
    }

    CouplingLedger ledger;
    ledger.mode = params.mode;
    ledger.kappa_source = params.kappa_source;
    ledger.matching = params.matching;
    ledger.slack = params.slack;
    ledger.resolution = phi.resolution();

    Density raw_phi = phi;
    Density raw_psi = psi;
    Density hat_phi = phi;
    Density hat_psi = psi;
    double residual = 1.0;
    double envelope_value = 2.0;
    std::optional<ActiveBlock> active;

    auto notify = [&](std::size_t n, StepStage stage) {
        if (params.observer) {
            params.observer(StepEvent{n, stage, ledger.n_wait.has_value(), hat_phi, hat_psi});
        }
    };

    auto open_block = [&](std::size_t start) {
        const auto plan = params.planner(start);
        if (plan.post < 1) throw PreconditionError("run_coupled: block plan needs post >= 1");
        ActiveBlock b;
        b.record.index = ledger.blocks.size();
        b.record.start = start;
        b.record.check_step = start + plan.pre;
        b.record.end = start + plan.pre + plan.post;
        b.record.kappa = plan.kappa;
        b.record.fraction = params.fraction;
        if (ledger.blocks.empty() && ledger.block == 0) ledger.block = plan.pre + plan.post;
        active = b;
    };

    for (std::size_t n = 0; n <= maps.size(); ++n) {
        if (n > 0) {
            const auto& f = maps[n - 1];
            raw_phi = push(f, raw_phi);
            raw_psi = push(f, raw_psi);
            hat_phi = push(f, hat_phi);
            hat_psi = push(f, hat_psi);
            notify(n, StepStage::pushed);
        }

        StepRecord row;
        row.n = n;
        row.l1_distance = l1_distance(raw_phi, raw_psi);

        if (active && n == active->record.end) {
            active->record.l1_at_end = row.l1_distance;
            active->record.complete = true;
            active->record.residual_mass = residual;
            active->record.matched_mass = 1.0 - residual;
            ledger.blocks.push_back(active->record);
            envelope_value *= 1.0 - (params.matching ? params.fraction * active->record.kappa : 0.0);
            active.reset();
            if (n < maps.size()) open_block(n);
        }

        if (!ledger.n_wait && in_cone(params, hat_phi, hat_psi)) {
            ledger.n_wait = n;
            if (n < maps.size()) open_block(n);
        }

        if (active && !active->checked && n == active->record.check_step) {
            auto& rec = active->record;
            rec.min_phi = min_value(hat_phi);
            rec.min_psi = min_value(hat_psi);
            const double floor = std::min(rec.min_phi, rec.min_psi);
            if (floor + params.slack < rec.kappa) {
                std::ostringstream msg;
                msg << "positivity failure in block " << rec.index << " at step " << n
                    << ": min " << floor << " < kappa " << rec.kappa;
                throw CertificateViolation(msg.str());
            }
            if (params.kappa_source == KappaSource::empirical) rec.kappa = floor;
            if (params.matching) {
                const double take = params.fraction * rec.kappa;
                if (take > floor) {
                    std::ostringstream msg;
                    msg << "positivity failure in block " << rec.index << " at step " << n
                        << ": cannot subtract " << take << " from min " << floor;
                    throw CertificateViolation(msg.str());
                }
                if (take > 0.0) {
                    hat_phi = match_subtract(hat_phi, rec.kappa, params.fraction);
                    hat_psi = match_subtract(hat_psi, rec.kappa, params.fraction);
                }
                residual *= 1.0 - take;
                notify(n, StepStage::subtracted);
            }
            row.kappa_used = rec.kappa;
            active->checked = true;
        }

        row.variation_phi = variation(hat_phi);
        row.variation_psi = variation(hat_psi);
        row.min_phi = min_value(hat_phi);
        row.min_psi = min_value(hat_psi);
        row.block_index = active ? static_cast<long long>(active->record.index) : -1;
        row.residual_mass = residual;
        row.envelope_value = envelope_value;
        ledger.steps.push_back(row);
    }

    if (active) {
        active->record.residual_mass = residual;
        active->record.matched_mass = 1.0 - residual;
        active->record.l1_at_end = ledger.steps.back().l1_distance;
        ledger.blocks.push_back(active->record);
    }
    return ledger;
}

std::optional<DecayFit> fit_decay(std::span<const double> distances, std::size_t first,
                                  std::size_t last) {
    std::vector<double> xs;
    std::vector<double> ys;
    const std::size_t end = std::min(last, distances.size() == 0 ? 0 : distances.size() - 1);
    for (std::size_t n = first; n <= end && n < distances.size(); ++n) {
        if (distances[n] > kDistanceFloor) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(std::log(distances[n]));
        }
    }
    if (xs.size() < 5) return std::nullopt;

    const auto m = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (my + slope * (xs[i] - mx));
        ss_res += r * r;
    }

    DecayFit fit;
    fit.Lambda_emp = std::exp(slope);
    fit.R2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.n_first = static_cast<std::size_t>(xs.front());
    fit.n_last = static_cast<std::size_t>(xs.back());
    fit.points = xs.size();
    return fit;
}

CertifyReport certify(const CouplingLedger& ledger, const BoundsReport& bounds) {
    if (ledger.mode != bounds.mode) throw PreconditionError("certify: ledger and bounds modes differ");
    CertifyReport rep;
    for (const auto& s : ledger.steps) {
        const double ratio = s.l1_distance / s.envelope_value;
        if (ratio > rep.max_ratio || rep.checked == 0) {
            rep.max_ratio = ratio;
            rep.worst_step = s.n;
        }
        if (s.l1_distance > s.envelope_value + ledger.slack && !rep.first_failure) {
            rep.first_failure = s.n;
            rep.pass = false;
        }
        ++rep.checked;
    }
    return rep;
}

void write_ledger_csv(std::ostream& os, const CouplingLedger& ledger) {
    os << "n,l1_distance,variation_phi,variation_psi,min_phi,min_psi,block_index,kappa_used,"
          "residual_mass,envelope_value\n";
    for (const auto& s : ledger.steps) {
        os << s.n << ',' << format_double(s.l1_distance) << ',' << format_double(s.variation_phi)
           << ',' << format_double(s.variation_psi) << ',' << format_double(s.min_phi) << ','
           << format_double(s.min_psi) << ',' << s.block_index << ','
           << format_double(s.kappa_used) << ',' << format_double(s.residual_mass) << ','
           << format_double(s.envelope_value) << '\n';
    }
}

}  // namespace memloss
