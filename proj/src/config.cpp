#include "robin/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "robin/errors.hpp"

namespace robin {

using nlohmann::json;

namespace {

const std::vector<std::pair<Command, std::string>> kCommands{
    {Command::assemble, "assemble"},         {Command::resolvent_sweep, "resolvent-sweep"},
    {Command::spectrum, "spectrum"},         {Command::weak_coupling, "weak-coupling"},
    {Command::trajectory, "trajectory"},     {Command::enclosure_check, "enclosure-check"},
    {Command::selftest, "selftest"},
};

std::string bc_name(LateralBC bc) { return bc == LateralBC::dirichlet ? "dirichlet" : "periodic"; }
std::string method_name(SolverMethod m) { return m == SolverMethod::sparse_lu ? "sparse_lu" : "gmres"; }

class Checker {
public:
    std::vector<Diagnostic> out;

    void error(const std::string& path, const std::string& msg) { out.push_back({"error", path, msg}); }
    void warning(const std::string& path, const std::string& msg) { out.push_back({"warning", path, msg}); }

    bool object(const json& j, const std::string& path, const std::set<std::string>& allowed)
    {
        if (!j.is_object()) {
            error(path, "must be an object");
            return false;
        }
        for (const auto& [key, _] : j.items())
            if (!allowed.count(key)) error(path + "/" + key, "unknown key");
        return true;
    }

    // Type check of an optional member; returns false when present with the wrong type.
    bool number(const json& j, const std::string& key, const std::string& path)
    {
        if (!j.contains(key)) return true;
        const auto& v = j.at(key);
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            error(path + "/" + key, "must be a finite number");
            return false;
        }
        return true;
    }

    bool integer(const json& j, const std::string& key, const std::string& path)
    {
        if (!j.contains(key)) return true;
        if (!j.at(key).is_number_integer()) {
            error(path + "/" + key, "must be an integer");
            return false;
        }
        return true;
    }

    bool string(const json& j, const std::string& key, const std::string& path)
    {
        if (!j.contains(key)) return true;
        if (!j.at(key).is_string()) {
            error(path + "/" + key, "must be a string");
            return false;
        }
        return true;
    }

    bool boolean(const json& j, const std::string& key, const std::string& path)
    {
        if (!j.contains(key)) return true;
        if (!j.at(key).is_boolean()) {
            error(path + "/" + key, "must be a boolean");
            return false;
        }
        return true;
    }

    bool number_list(const json& j, const std::string& key, const std::string& path)
    {
        if (!j.contains(key)) return true;
        const auto& v = j.at(key);
        bool ok = v.is_array();
        if (ok)
            for (const auto& e : v) ok = ok && e.is_number() && std::isfinite(e.get<double>());
        if (!ok) error(path + "/" + key, "must be an array of finite numbers");
        return ok;
    }
};

template <class T> T get_or(const json& j, const std::string& key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

const json& member(const json& j, const std::string& key)
{
    static const json empty = json::object();
    return j.is_object() && j.contains(key) ? j.at(key) : empty;
}

void check_coupling(Checker& ck, const json& c, Command cmd, int d)
{
    const std::string p = "/coupling";
    if (!ck.object(c, p, {"kind", "alpha0", "c", "half_width", "amplitude", "smoothing", "sigma"})) return;
    for (const char* k : {"alpha0", "c", "half_width", "amplitude", "smoothing", "sigma"}) ck.number(c, k, p);
    if (!c.contains("kind")) {
        ck.error(p + "/kind", "is required");
        return;
    }
    if (!ck.string(c, "kind", p)) return;
    const auto kind = c.at("kind").get<std::string>();
    const bool sampled = kind.rfind("sampled:", 0) == 0;
    if (kind != "constant" && kind != "step" && kind != "gauss" && !sampled) {
        ck.error(p + "/kind", "must be constant, step, gauss or sampled:<path>");
        return;
    }
    if (kind == "step") {
        if (c.contains("half_width") && c["half_width"].is_number() && !(c["half_width"].get<double>() > 0.0))
            ck.error(p + "/half_width", "must be positive");
        const double w = c.contains("smoothing") && c["smoothing"].is_number() ? c["smoothing"].get<double>() : 0.0;
        const double a = c.contains("half_width") && c["half_width"].is_number() ? c["half_width"].get<double>() : 1.0;
        if (w < 0.0 || w > 2.0 * a) ck.error(p + "/smoothing", "must lie in [0, 2 half_width]");
        else if (w == 0.0 && cmd == Command::resolvent_sweep)
            ck.error(p + "/smoothing",
                     "sharp step is not Lipschitz: the W1_inf hypothesis of the resolvent estimates is violated");
    }
    if (kind == "gauss" && c.contains("sigma") && c["sigma"].is_number() && !(c["sigma"].get<double>() > 0.0))
        ck.error(p + "/sigma", "must be positive");
    if (sampled) {
        const std::string path = kind.substr(8);
        if (d != 2) ck.error(p + "/kind", "sampled couplings are one-dimensional and need d = 2");
        std::ifstream in(path);
        if (!in) ck.error(p + "/kind", "cannot read sample file " + path);
    }
    if ((cmd == Command::weak_coupling || cmd == Command::trajectory) && (kind == "constant" || sampled))
        ck.error(p + "/kind", "this command needs a step or gauss profile");
}

void check_grid(Checker& ck, const json& g)
{
    const std::string p = "/grid";
    if (!ck.object(g, p, {"d", "L", "n_lat", "epsilon", "n_trans", "lateral_bc", "refine"})) return;
    if (ck.integer(g, "d", p) && g.contains("d")) {
        const auto d = g["d"].get<long long>();
        if (d != 2 && d != 3) ck.error(p + "/d", "must be 2 or 3");
    }
    if (ck.number(g, "L", p) && g.contains("L") && !(g["L"].get<double>() > 0.0)) ck.error(p + "/L", "must be positive");
    if (ck.integer(g, "n_lat", p) && g.contains("n_lat") && g["n_lat"].get<long long>() < 3)
        ck.error(p + "/n_lat", "must be at least 3");
    if (ck.number(g, "epsilon", p) && g.contains("epsilon") && !(g["epsilon"].get<double>() > 0.0))
        ck.error(p + "/epsilon", "must be positive");
    if (ck.integer(g, "n_trans", p) && g.contains("n_trans")) {
        const auto n = g["n_trans"].get<long long>();
        if (n != 0 && n < 2) ck.error(p + "/n_trans", "must be 0 (automatic) or at least 2: both faces need a node");
    }
    if (ck.string(g, "lateral_bc", p) && g.contains("lateral_bc")) {
        const auto bc = g["lateral_bc"].get<std::string>();
        if (bc != "dirichlet" && bc != "periodic") ck.error(p + "/lateral_bc", "must be dirichlet or periodic");
    }
    ck.boolean(g, "refine", p);
}

void check_sweep(Checker& ck, const json& s, Command cmd, const json& grid)
{
    const std::string p = "/sweep";
    if (!ck.object(s, p, {"epsilons", "c_values"})) return;
    const bool eps_ok = ck.number_list(s, "epsilons", p);
    const bool c_ok = ck.number_list(s, "c_values", p);
    if (eps_ok && s.contains("epsilons"))
        for (const auto& e : s["epsilons"])
            if (!(e.get<double>() > 0.0)) {
                ck.error(p + "/epsilons", "values must be positive");
                break;
            }
    if (cmd == Command::resolvent_sweep && eps_ok) {
        const auto eps = get_or<std::vector<double>>(s, "epsilons", {});
        if (eps.size() < 4) {
            ck.error(p + "/epsilons", "a rate fit needs at least 4 values");
        } else {
            const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
            if (*lo > 0.0 && std::log10(*hi / *lo) < 0.9 - 1e-12)
                ck.error(p + "/epsilons", "values must span close to a decade (ratio >= 10^0.9)");
        }
    }
    if ((cmd == Command::weak_coupling || cmd == Command::trajectory) && c_ok &&
        get_or<std::vector<double>>(s, "c_values", {}).empty())
        ck.error(p + "/c_values", "is required and must be non-empty");
    (void)grid;
}

void check_spectrum(Checker& ck, const json& s)
{
    const std::string p = "/spectrum";
    if (!ck.object(s, p, {"operator", "k", "near"})) return;
    if (ck.string(s, "operator", p) && s.contains("operator")) {
        const auto op = s["operator"].get<std::string>();
        if (op != "H_eps" && op != "H0") ck.error(p + "/operator", "must be H_eps or H0");
    }
    if (ck.integer(s, "k", p) && s.contains("k") && s["k"].get<long long>() < 1) ck.error(p + "/k", "must be positive");
    if (s.contains("near") && !s["near"].is_null()) {
        const auto& n = s["near"];
        if (!n.is_array() || n.size() != 2 || !n[0].is_number() || !n[1].is_number())
            ck.error(p + "/near", "must be [re, im] or null");
    }
}

void check_solver(Checker& ck, const json& s, Command cmd)
{
    const std::string p = "/solver";
    if (!ck.object(s, p, {"method", "tolerance", "max_iter", "seed", "probes", "opnorm_max_iter", "opnorm_rel_tol",
                          "arnoldi_tol", "selftest_samples"}))
        return;
    if (ck.string(s, "method", p) && s.contains("method")) {
        const auto m = s["method"].get<std::string>();
        if (m != "sparse_lu" && m != "gmres") ck.error(p + "/method", "must be sparse_lu or gmres");
    }
    for (const char* k : {"tolerance", "opnorm_rel_tol", "arnoldi_tol"})
        if (ck.number(s, k, p) && s.contains(k) && !(s[k].get<double>() > 0.0)) ck.error(p + "/" + k, "must be positive");
    for (const char* k : {"max_iter", "probes", "opnorm_max_iter", "selftest_samples"})
        if (ck.integer(s, k, p) && s.contains(k) && s[k].get<long long>() < 1) ck.error(p + "/" + k, "must be positive");
    if (s.contains("seed") && !s["seed"].is_number_unsigned()) ck.error(p + "/seed", "must be a non-negative integer");
    if (cmd == Command::resolvent_sweep && !s.contains("seed"))
        ck.error(p + "/seed", "is required for randomized norm estimates");
}

void check_output(Checker& ck, const json& o)
{
    const std::string p = "/output";
    if (!ck.object(o, p, {"directory", "formats"})) return;
    ck.string(o, "directory", p);
    if (o.contains("formats")) {
        const auto& f = o["formats"];
        bool ok = f.is_array() && !f.empty();
        if (ok)
            for (const auto& e : f) ok = ok && e.is_string() && (e == "csv" || e == "json");
        if (!ok) ck.error(p + "/formats", "must be a non-empty subset of [\"csv\", \"json\"]");
    }
}

} // namespace

std::string to_string(Command cmd)
{
    for (const auto& [c, name] : kCommands)
        if (c == cmd) return name;
    return "unknown";
}

std::optional<Command> parse_command(const std::string& s)
{
    for (const auto& [c, name] : kCommands)
        if (name == s) return c;
    return std::nullopt;
}

BoundaryCoupling CouplingSpec::build() const
{
    if (kind == "constant") return BoundaryCoupling::constant(alpha0);
    if (kind == "step") return BoundaryCoupling::step(alpha0, c, half_width, amplitude, smoothing);
    if (kind == "gauss") return BoundaryCoupling::gaussian(alpha0, c, amplitude, sigma);
    if (is_sampled()) return BoundaryCoupling::sampled_from_csv(sample_path(), alpha0);
    throw ConfigError("unknown coupling kind: " + kind);
}

LayerGrid GridSpec::build(double eps) const
{
    Index nt = n_trans;
    if (nt == 0) {
        const LayerGrid probe = build_grid(d, L, n_lat, eps, 2, lateral_bc);
        nt = default_n_trans(eps, probe.h_lat, false);
    }
    return build_grid(d, L, n_lat, eps, nt, lateral_bc);
}

bool OutputSpec::wants(const std::string& fmt) const
{
    return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

std::vector<Diagnostic> validate(const json& doc)
{
    Checker ck;
    if (!ck.object(doc, "", {"command", "coupling", "grid", "sweep", "spectrum", "solver", "output"})) return ck.out;
    if (!doc.contains("command")) {
        ck.error("/command", "is required");
        return ck.out;
    }
    if (!doc["command"].is_string() || !parse_command(doc["command"].get<std::string>())) {
        ck.error("/command", "must be one of assemble, resolvent-sweep, spectrum, weak-coupling, trajectory, "
                             "enclosure-check, selftest");
        return ck.out;
    }
    const Command cmd = *parse_command(doc["command"].get<std::string>());
    const json& grid = member(doc, "grid");
    const int d = grid.contains("d") && grid["d"].is_number_integer() ? grid["d"].get<int>() : 2;

    if (doc.contains("coupling")) check_coupling(ck, doc["coupling"], cmd, d);
    else if (cmd != Command::selftest) ck.error("/coupling", "is required");
    check_grid(ck, grid);
    check_sweep(ck, member(doc, "sweep"), cmd, grid);
    check_spectrum(ck, member(doc, "spectrum"));
    check_solver(ck, member(doc, "solver"), cmd);
    check_output(ck, member(doc, "output"));
    if (cmd == Command::weak_coupling && d == 3)
        ck.warning("/grid/d", "d = 3 weak-coupling runs are exploratory; no expansion is asserted");
    return ck.out;
}

std::vector<Diagnostic> validate_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        return {{"error", "", std::string("not valid JSON: ") + e.what()}};
    }
    return validate(doc);
}

ExperimentConfig parse_config(const json& doc)
{
    const auto diags = validate(doc);
    std::ostringstream msg;
    int errors = 0;
    for (const auto& dg : diags)
        if (dg.severity == "error") msg << (errors++ ? "; " : "") << dg.path << ": " << dg.message;
    if (errors) throw ConfigError("invalid config: " + msg.str());

    ExperimentConfig cfg;
    cfg.command = *parse_command(doc["command"].get<std::string>());
    const json& c = member(doc, "coupling");
    cfg.coupling.kind = get_or<std::string>(c, "kind", cfg.coupling.kind);
    cfg.coupling.alpha0 = get_or(c, "alpha0", cfg.coupling.alpha0);
    cfg.coupling.c = get_or(c, "c", cfg.coupling.c);
    cfg.coupling.half_width = get_or(c, "half_width", cfg.coupling.half_width);
    cfg.coupling.amplitude = get_or(c, "amplitude", cfg.coupling.amplitude);
    cfg.coupling.smoothing = get_or(c, "smoothing", cfg.coupling.smoothing);
    cfg.coupling.sigma = get_or(c, "sigma", cfg.coupling.sigma);

    const json& g = member(doc, "grid");
    cfg.grid.d = get_or(g, "d", cfg.grid.d);
    cfg.grid.L = get_or(g, "L", cfg.grid.L);
    cfg.grid.n_lat = get_or(g, "n_lat", cfg.grid.n_lat);
    cfg.grid.epsilon = get_or(g, "epsilon", cfg.grid.epsilon);
    cfg.grid.n_trans = get_or(g, "n_trans", cfg.grid.n_trans);
    cfg.grid.lateral_bc = get_or<std::string>(g, "lateral_bc", "dirichlet") == "periodic" ? LateralBC::periodic
                                                                                          : LateralBC::dirichlet;
    cfg.grid.refine = get_or(g, "refine", cfg.grid.refine);

    const json& s = member(doc, "sweep");
    cfg.sweep.epsilons = get_or<std::vector<double>>(s, "epsilons", {});
    cfg.sweep.c_values = get_or<std::vector<double>>(s, "c_values", {});

    const json& sp = member(doc, "spectrum");
    cfg.spectrum.op = get_or<std::string>(sp, "operator", "H_eps") == "H0" ? OperatorKind::H0 : OperatorKind::H_eps;
    cfg.spectrum.k = get_or(sp, "k", cfg.spectrum.k);
    if (sp.contains("near") && !sp["near"].is_null())
        cfg.spectrum.near = cplx(sp["near"][0].get<double>(), sp["near"][1].get<double>());

    const json& so = member(doc, "solver");
    cfg.solver.method = get_or<std::string>(so, "method", "sparse_lu") == "gmres" ? SolverMethod::gmres
                                                                                 : SolverMethod::sparse_lu;
    cfg.solver.tolerance = get_or(so, "tolerance", cfg.solver.tolerance);
    cfg.solver.max_iter = get_or(so, "max_iter", cfg.solver.max_iter);
    if (so.contains("seed")) cfg.solver.seed = so["seed"].get<std::uint64_t>();
    cfg.solver.probes = get_or(so, "probes", cfg.solver.probes);
    cfg.solver.opnorm_max_iter = get_or(so, "opnorm_max_iter", cfg.solver.opnorm_max_iter);
    cfg.solver.opnorm_rel_tol = get_or(so, "opnorm_rel_tol", cfg.solver.opnorm_rel_tol);
    cfg.solver.arnoldi_tol = get_or(so, "arnoldi_tol", cfg.solver.arnoldi_tol);
    cfg.solver.selftest_samples = get_or(so, "selftest_samples", cfg.solver.selftest_samples);

    const json& o = member(doc, "output");
    cfg.output.directory = get_or(o, "directory", cfg.output.directory);
    cfg.output.formats = get_or(o, "formats", cfg.output.formats);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg)
{
    json j;
    j["command"] = to_string(cfg.command);
    j["coupling"] = {{"kind", cfg.coupling.kind},          {"alpha0", cfg.coupling.alpha0},
                     {"c", cfg.coupling.c},                {"half_width", cfg.coupling.half_width},
                     {"amplitude", cfg.coupling.amplitude}, {"smoothing", cfg.coupling.smoothing},
                     {"sigma", cfg.coupling.sigma}};
    j["grid"] = {{"d", cfg.grid.d},
                 {"L", cfg.grid.L},
                 {"n_lat", cfg.grid.n_lat},
                 {"epsilon", cfg.grid.epsilon},
                 {"n_trans", cfg.grid.n_trans},
                 {"lateral_bc", bc_name(cfg.grid.lateral_bc)},
                 {"refine", cfg.grid.refine}};
    j["sweep"] = {{"epsilons", cfg.sweep.epsilons}, {"c_values", cfg.sweep.c_values}};
    j["spectrum"] = {{"operator", to_string(cfg.spectrum.op)}, {"k", cfg.spectrum.k}, {"near", nullptr}};
    if (cfg.spectrum.near) j["spectrum"]["near"] = {cfg.spectrum.near->real(), cfg.spectrum.near->imag()};
    j["solver"] = {{"method", method_name(cfg.solver.method)},
                   {"tolerance", cfg.solver.tolerance},
                   {"max_iter", cfg.solver.max_iter},
                   {"probes", cfg.solver.probes},
                   {"opnorm_max_iter", cfg.solver.opnorm_max_iter},
                   {"opnorm_rel_tol", cfg.solver.opnorm_rel_tol},
                   {"arnoldi_tol", cfg.solver.arnoldi_tol},
                   {"selftest_samples", cfg.solver.selftest_samples}};
    if (cfg.solver.seed) j["solver"]["seed"] = *cfg.solver.seed;
    j["output"] = {{"directory", cfg.output.directory}, {"formats", cfg.output.formats}};
    return j;
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& cfg)
{
    // where results go is not part of the experiment
    json j = to_json(cfg);
    j["output"].erase("directory");
    return sha256_hex(j.dump());
}

} // namespace robin
