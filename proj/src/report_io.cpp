#include "robin/report_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <system_error>
#include <thread>

namespace robin {

using nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row()
{
    rows_.emplace_back();
    return *this;
}

CsvTable& CsvTable::add(double v) { return add(format_double(v)); }
CsvTable& CsvTable::add(long long v) { return add(std::to_string(v)); }

CsvTable& CsvTable::add(const std::string& v)
{
    if (rows_.empty()) throw std::logic_error("CsvTable::add before row()");
    if (v.find_first_of(",\n\"") != std::string::npos) throw std::invalid_argument("CSV field needs quoting: " + v);
    rows_.back().push_back(v);
    return *this;
}

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += fields[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
        if (r.size() != header_.size()) throw std::logic_error("CSV row width does not match header");
        line(r);
    }
    return out;
}

namespace {

// nlohmann writes NaN and inf as null; keep them distinguishable
json num(double v)
{
    if (std::isfinite(v)) return v;
    return format_double(v);
}

json complex_list(const std::vector<cplx>& zs)
{
    json a = json::array();
    for (const cplx z : zs) a.push_back({num(z.real()), num(z.imag())});
    return a;
}

std::string bc_name(LateralBC bc) { return bc == LateralBC::dirichlet ? "dirichlet" : "periodic"; }

} // namespace

json to_json(const GridProvenance& g)
{
    return {{"d", g.d},           {"L", g.L},
            {"n_lat", g.n_lat},   {"epsilon", g.epsilon},
            {"n_trans", g.n_trans}, {"lateral_bc", bc_name(g.lateral_bc)},
            {"seed", g.seed}};
}

json to_json(const LayerGrid& grid)
{
    json j = to_json(provenance(grid));
    j.erase("seed");
    j["h_lat"] = grid.h_lat;
    j["h_trans"] = grid.h_trans;
    j["node_count"] = grid.node_count();
    j["free_node_count"] = grid.free_nodes().size();
    j["lateral_count"] = grid.lateral_count();
    j["box_mode_energy"] = grid.box_mode_energy();
    j["lat_coords"] = grid.lat_coords;
    j["trans_coords"] = grid.trans_coords;
    return j;
}

json to_json(const TheoremConstants& c)
{
    return {{"C", num(c.C)}, {"C_eps", num(c.C_eps)}, {"C1_eps", num(c.C1_eps)}, {"C0", num(c.C0)}, {"epsilon", c.epsilon}};
}

json to_json(const ResolventDiffReport& r)
{
    return {{"epsilon", r.epsilon},
            {"norm_L2", num(r.norm_L2)},
            {"bound_L2", num(r.bound_L2)},
            {"norm_W1_corrected", num(r.norm_W1_corrected)},
            {"bound_W1", num(r.bound_W1)},
            {"norm_W1_uncorrected", num(r.norm_W1_uncorrected)},
            {"lemma21_ratio", num(r.lemma21_ratio)},
            {"lemma21_opnorm", num(r.lemma21_opnorm)},
            {"lemma21_bound", num(r.lemma21_bound)},
            {"margin_L2", num(r.margin_L2)},
            {"margin_W1", num(r.margin_W1)},
            {"converged", r.converged},
            {"unconverged", r.unconverged},
            {"constants", to_json(r.constants)},
            {"grid", to_json(r.grid)}};
}

json to_json(const RateFit& f)
{
    return {{"epsilons", f.epsilons},
            {"norms", f.norms},
            {"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"r_squared", num(f.r_squared)}};
}

json to_json(const SweepResult& s)
{
    json reports = json::array();
    for (const auto& r : s.reports) reports.push_back(to_json(r));
    return {{"reports", reports},
            {"fit_L2", to_json(s.fit_L2)},
            {"fit_W1", to_json(s.fit_W1)},
            {"fit_W1_uncorrected", to_json(s.fit_W1_uncorrected)},
            {"excluded_epsilons", s.excluded_epsilons}};
}

json to_json(const SpectrumReport& r)
{
    json viol = json::array();
    for (const auto& v : r.enclosure_violations)
        viol.push_back({{"eigenvalue", {num(v.eigenvalue.real()), num(v.eigenvalue.imag())}},
                        {"residual", num(v.residual)},
                        {"re_excess", num(v.re_excess)},
                        {"im_excess", num(v.im_excess)}});
    json residuals = json::array();
    for (double x : r.residuals) residuals.push_back(num(x));
    return {{"operator", to_string(r.op)},
            {"target", {r.target.real(), r.target.imag()}},
            {"eigenvalues", complex_list(r.eigenvalues)},
            {"residuals", residuals},
            {"converged", r.converged},
            {"n_requested", r.n_requested},
            {"n_converged", r.n_converged},
            {"complete", r.complete},
            {"threshold", r.threshold},
            {"delta", r.delta},
            {"below_threshold", complex_list(r.below_threshold)},
            {"violations", viol},
            {"alpha_sup", r.alpha_sup},
            {"coupling", to_string(r.coupling)},
            {"grid", to_json(r.grid)}};
}

json to_json(const WeakCouplingReport& r)
{
    json mu = json::array(), pred = json::array(), rc = json::array();
    for (std::size_t i = 0; i < r.c_values.size(); ++i) {
        mu.push_back(num(r.mu[i]));
        pred.push_back(num(r.prediction[i]));
        rc.push_back(num(r.residual_over_c3[i]));
    }
    return {{"operator", to_string(r.op)},
            {"alpha0", r.alpha0},
            {"profile_integral", r.profile_integral},
            {"threshold", r.threshold},
            {"delta", r.delta},
            {"c_values", r.c_values},
            {"present", r.present},
            {"mu", mu},
            {"prediction", pred},
            {"residual_over_c3", rc},
            {"K_fit", num(r.K_fit)},
            {"grid", to_json(r.grid)}};
}

json to_json(const Trajectory& t)
{
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json pts = json::array();
    for (const auto& p : t.points)
        pts.push_back({{"c", p.c}, {"lowest", p.lowest}, {"tracked", p.tracked}, {"below", p.below},
                       {"rejected", p.rejected}});
    return {{"alpha0", t.alpha0},
            {"threshold", t.threshold},
            {"delta", t.delta},
            {"emergence", opt(t.emergence)},
            {"minimum_c", opt(t.minimum_c)},
            {"minimum_value", opt(t.minimum_value)},
            {"reabsorption", opt(t.reabsorption)},
            {"points", pts},
            {"grid", to_json(t.grid)}};
}

json to_json(const PairedSpectra& p)
{
    json pairs = json::array();
    for (const auto& q : p.pairs)
        pairs.push_back({{"lambda_eps", {q.lambda_eps.real(), q.lambda_eps.imag()}},
                         {"lambda_0", {q.lambda_0.real(), q.lambda_0.imag()}},
                         {"distance", q.distance}});
    return {{"epsilon", p.epsilon},
            {"pairs", pairs},
            {"unpaired_eps", complex_list(p.unpaired_eps)},
            {"unpaired_0", complex_list(p.unpaired_0)},
            {"max_distance", p.max_distance}};
}

std::string sweep_csv(const SweepResult& s)
{
    CsvTable t({"epsilon", "norm_L2", "bound_L2", "norm_W1", "bound_W1", "norm_W1_uncorrected", "lemma21_ratio",
                "lemma21_bound", "margin_L2", "margin_W1", "converged", "n_lat", "n_trans", "slope_L2", "slope_W1"});
    for (const auto& r : s.reports)
        t.row()
            .add(r.epsilon)
            .add(r.norm_L2)
            .add(r.bound_L2)
            .add(r.norm_W1_corrected)
            .add(r.bound_W1)
            .add(r.norm_W1_uncorrected)
            .add(r.lemma21_ratio)
            .add(r.lemma21_bound)
            .add(r.margin_L2)
            .add(r.margin_W1)
            .add(r.converged)
            .add(static_cast<long long>(r.grid.n_lat))
            .add(static_cast<long long>(r.grid.n_trans))
            .add(s.fit_L2.slope)
            .add(s.fit_W1.slope);
    return t.str();
}

std::string spectrum_csv(const std::vector<SpectrumReport>& reports)
{
    CsvTable t({"operator", "epsilon", "re", "im", "residual", "converged", "below_threshold", "in_enclosure"});
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
            const cplx z = r.eigenvalues[i];
            const bool below = r.converged[i] && z.real() < r.threshold - r.delta;
            bool inside = true;
            for (const auto& v : r.enclosure_violations)
                if (v.eigenvalue == z) inside = false;
            t.row()
                .add(to_string(r.op))
                .add(r.grid.epsilon)
                .add(z.real())
                .add(z.imag())
                .add(r.residuals[i])
                .add(static_cast<bool>(r.converged[i]))
                .add(below)
                .add(inside);
        }
    return t.str();
}

std::string weak_coupling_csv(const WeakCouplingReport& r)
{
    CsvTable t({"c", "present", "mu", "prediction", "residual_over_c3"});
    for (std::size_t i = 0; i < r.c_values.size(); ++i)
        t.row()
            .add(r.c_values[i])
            .add(static_cast<bool>(r.present[i]))
            .add(r.mu[i])
            .add(r.prediction[i])
            .add(r.residual_over_c3[i]);
    return t.str();
}

std::string trajectory_csv(const Trajectory& tr)
{
    CsvTable t({"c", "lowest", "tracked", "below", "rejected"});
    for (const auto& p : tr.points) t.row().add(p.c).add(p.lowest).add(p.tracked).add(p.below).add(p.rejected);
    return t.str();
}

void atomic_write(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    const fs::path tmp = target.string() + ".tmp." + std::to_string(tid);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename into " + path + ": " + ec.message());
    }
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

} // namespace robin
