#include "memloss/report_io.hpp"

#include <fstream>

#include "memloss/errors.hpp"

namespace memloss {

namespace {

template <class T>
ojson opt(const std::optional<T>& v) {
    return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace

ojson to_json(const BranchSpec& b) {
    ojson j;
    j["u"] = b.u;
    j["v"] = b.v;
    j["form"] = b.form == BranchForm::affine ? "affine" : "sine";
    j["slope"] = b.slope;
    j["offset"] = b.offset;
    j["amplitude"] = b.amplitude;
    return j;
}

ojson to_json(const MapAnalysis& a) {
    ojson j;
    j["lambda_min"] = a.lambda_min;
    j["M0"] = a.M0;
    j["A"] = a.A;
    j["C1"] = a.C1;
    j["omega"] = a.omega;
    j["d_omega"] = opt(a.d_omega);
    return j;
}

ojson to_json(const FamilyConstants& f) {
    ojson j;
    j["lambda0"] = f.lambda0;
    j["A0"] = f.A0;
    j["M0"] = f.M0;
    j["C1"] = f.C1;
    return j;
}

ojson to_json(const BoundsReport& b) {
    ojson j;
    j["mode"] = to_string(b.mode);
    j["lambda0"] = b.lambda0;
    j["A0"] = b.A0;
    j["M0_family"] = b.M0_family;
    j["C1"] = b.C1;
    j["C0"] = b.C0;
    j["L_star"] = b.L_star;
    j["a_star"] = opt(b.a_star);
    j["tau"] = b.tau;
    j["kappa"] = b.kappa;
    j["block"] = b.block;
    j["Lambda"] = b.Lambda;
    j["delta0"] = opt(b.delta0);
    return j;
}

ojson to_json(const Cylinder& c) {
    ojson j;
    j["lo"] = c.lo;
    j["hi"] = c.hi;
    j["itinerary"] = c.itinerary;
    return j;
}

ojson to_json(const CoveringReport& c) {
    ojson j;
    j["N"] = c.N;
    j["n1"] = c.n1;
    j["s0"] = c.s0;
    j["n0"] = c.n0;
    j["M0"] = c.M0;
    j["epsilon"] = c.epsilon;
    j["kappa0"] = c.kappa0;
    j["kappa_eps"] = c.kappa_eps;
    ojson table = ojson::array();
    for (const auto& e : c.s_table) {
        ojson row = to_json(e.cylinder);
        row["s"] = e.escape.s;
        row["J_s"] = {e.escape.lo, e.escape.hi};
        row["covered_branch"] = e.escape.covered_branch;
        table.push_back(std::move(row));
    }
    j["s_table"] = std::move(table);
    return j;
}

ojson to_json(const CurveCover& c) {
    ojson j;
    j["delta0"] = c.delta0;
    j["covered"] = c.covered;
    j["uncovered"] = opt(c.uncovered);
    ojson probes = ojson::array();
    for (const auto& p : c.probes) {
        ojson row;
        row["t"] = p.t;
        row["epsilon"] = p.epsilon;
        row["alpha"] = p.alpha;
        row["kappa"] = p.kappa;
        row["n0"] = p.n0;
        row["tau"] = p.tau;
        row["n"] = p.n;
        row["selected"] = p.selected;
        probes.push_back(std::move(row));
    }
    j["probes"] = std::move(probes);
    return j;
}

ojson to_json(const std::optional<DecayFit>& f) {
    ojson j;
    j["available"] = f.has_value();
    if (f) {
        j["Lambda_emp"] = f->Lambda_emp;
        j["R2"] = f->R2;
        j["n_range"] = {f->n_first, f->n_last};
        j["points"] = f->points;
    }
    return j;
}

ojson to_json(const CertifyReport& c) {
    ojson j;
    j["pass"] = c.pass;
    j["max_ratio"] = c.max_ratio;
    j["worst_step"] = c.worst_step;
    j["first_failure"] = opt(c.first_failure);
    j["checked"] = c.checked;
    return j;
}

ojson to_json(const BlockRecord& b) {
    ojson j;
    j["index"] = b.index;
    j["start"] = b.start;
    j["check_step"] = b.check_step;
    j["end"] = b.end;
    j["kappa"] = b.kappa;
    j["fraction"] = b.fraction;
    j["min_phi"] = b.min_phi;
    j["min_psi"] = b.min_psi;
    j["matched_mass"] = b.matched_mass;
    j["residual_mass"] = b.residual_mass;
    j["l1_at_end"] = b.l1_at_end;
    j["complete"] = b.complete;
    return j;
}

ojson ledger_summary(const CouplingLedger& l) {
    ojson j;
    j["mode"] = to_string(l.mode);
    j["block"] = l.block;
    j["kappa_source"] = to_string(l.kappa_source);
    j["matching"] = l.matching;
    j["slack"] = l.slack;
    j["grid"] = l.resolution;
    j["n_wait"] = opt(l.n_wait);
    ojson blocks = ojson::array();
    for (const auto& b : l.blocks) blocks.push_back(to_json(b));
    j["blocks"] = std::move(blocks);
    return j;
}

void write_json(const std::filesystem::path& path, const ojson& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace memloss
