#include "robin/experiments.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <Eigen/Core>

#include "robin/errors.hpp"
#include "robin/report_io.hpp"
#include "robin/resolvent.hpp"
#include "robin/selftest.hpp"
#include "robin/spectral.hpp"

namespace robin {

using nlohmann::json;
namespace fs = std::filesystem;

std::string tool_version() { return "0.1.0"; }

namespace {

std::string utc_timestamp(std::chrono::system_clock::time_point tp)
{
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Writer {
public:
    Writer(fs::path dir, const OutputSpec& spec) : dir_(std::move(dir)), spec_(spec) {}

    void write(const std::string& name, const std::string& content)
    {
        atomic_write((dir_ / name).string(), content);
        outputs_.push_back(name);
    }
    void csv(const std::string& name, const std::string& content)
    {
        if (spec_.wants("csv")) write(name, content);
    }
    void json_file(const std::string& name, const json& j)
    {
        if (spec_.wants("json")) write(name, dump_json(j));
    }
    const std::vector<std::string>& outputs() const { return outputs_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    OutputSpec spec_;
    std::vector<std::string> outputs_;
};

StudyOptions study_options(const ExperimentConfig& cfg)
{
    StudyOptions o;
    o.probes = cfg.solver.probes;
    o.seed = cfg.solver.seed.value_or(1);
    o.opnorm.max_iter = cfg.solver.opnorm_max_iter;
    o.opnorm.rel_tol = cfg.solver.opnorm_rel_tol;
    o.solver.method = cfg.solver.method;
    o.solver.tolerance = cfg.solver.tolerance;
    o.solver.max_iter = cfg.solver.max_iter;
    return o;
}

SpectrumOptions spectrum_options(const ExperimentConfig& cfg)
{
    SpectrumOptions o;
    o.arnoldi.tol = cfg.solver.arnoldi_tol;
    o.arnoldi.seed = cfg.solver.seed.value_or(o.arnoldi.seed);
    o.arnoldi.solver.method = cfg.solver.method;
    o.arnoldi.solver.tolerance = cfg.solver.tolerance;
    o.arnoldi.solver.max_iter = cfg.solver.max_iter;
    return o;
}

SpectrumReport spectrum_for(const ExperimentConfig& cfg, const OperatorSet& ops, OperatorKind op,
                            CouplingKind kind)
{
    const auto so = spectrum_options(cfg);
    SpectrumReport r = cfg.spectrum.near ? compute_spectrum(ops, op, *cfg.spectrum.near, cfg.spectrum.k, so)
                                         : lowest_spectrum(ops, op, cfg.spectrum.k, so);
    r.coupling = kind;
    return r;
}

int run_assemble(const ExperimentConfig& cfg, Writer& w, json& summary)
{
    const BoundaryCoupling coupling = cfg.coupling.build();
    const LayerGrid grid = cfg.grid.build();
    const OperatorSet ops = assemble_operators(grid, coupling);
    auto mtx = [&](const std::string& name, const ComplexSparseMatrix& m) {
        std::ostringstream os;
        m.write_matrix_market(os);
        w.write(name, os.str());
    };
    mtx("H_eps.mtx", ops.H_eps);
    mtx("M_L2.mtx", ops.M_L2);
    mtx("M_W1.mtx", ops.M_W1);
    mtx("H0.mtx", ops.H0);
    mtx("M0_L2.mtx", ops.M0_L2);
    w.write("grid.json", dump_json(to_json(grid)));
    summary = {{"grid", to_json(grid)},
               {"nnz_H_eps", ops.H_eps.nnz()},
               {"nnz_H0", ops.H0.nnz()},
               {"alpha_sup", ops.norms.alpha},
               {"gradient_sup", ops.norms.gradient_finite() ? json(ops.norms.gradient) : json("inf")},
               {"threshold", ops.threshold},
               {"H0_hermitian", ops.H0.is_hermitian(1e-14)}};
    w.json_file("assemble.json", summary);
    return kExitOk;
}

int run_resolvent_sweep(const ExperimentConfig& cfg, int threads, Writer& w, json& summary)
{
    const BoundaryCoupling coupling = cfg.coupling.build();
    GridPolicy policy;
    policy.d = cfg.grid.d;
    policy.L = cfg.grid.L;
    policy.n_lat = cfg.grid.n_lat;
    policy.lateral_bc = cfg.grid.lateral_bc;
    policy.n_trans = cfg.grid.n_trans;
    policy.refine = cfg.grid.refine;
    SweepOptions so;
    so.threads = threads;
    const SweepResult res = rate_sweep(coupling, cfg.sweep.epsilons, policy, study_options(cfg), so);
    w.csv("resolvent_sweep.csv", sweep_csv(res));
    summary = to_json(res);
    summary["coupling"] = to_string(coupling.kind());
    w.json_file("resolvent_sweep.json", summary);
    return res.excluded_epsilons.empty() ? kExitOk : kExitNumerical;
}

int run_spectrum(const ExperimentConfig& cfg, Writer& w, json& summary)
{
    const BoundaryCoupling coupling = cfg.coupling.build();
    const OperatorSet ops = assemble_operators(cfg.grid.build(), coupling);
    const SpectrumReport r = spectrum_for(cfg, ops, cfg.spectrum.op, coupling.kind());
    w.csv("spectrum.csv", spectrum_csv({r}));
    summary = to_json(r);
    w.json_file("spectrum.json", summary);
    return r.complete ? kExitOk : kExitNumerical;
}

int run_weak_coupling(const ExperimentConfig& cfg, Writer& w, json& summary)
{
    const BoundaryCoupling profile = cfg.coupling.build();
    const WeakCouplingReport r = weak_coupling_sweep(cfg.grid.build(), cfg.coupling.alpha0, profile,
                                                     cfg.sweep.c_values, cfg.spectrum.op, spectrum_options(cfg));
    w.csv("weak_coupling.csv", weak_coupling_csv(r));
    summary = to_json(r);
    w.json_file("weak_coupling.json", summary);
    return kExitOk;
}

int run_trajectory(const ExperimentConfig& cfg, int threads, Writer& w, json& summary)
{
    const BoundaryCoupling profile = cfg.coupling.build();
    const Trajectory t = coupling_trajectory(cfg.grid.build(), cfg.coupling.alpha0, profile, cfg.sweep.c_values,
                                             spectrum_options(cfg), threads);
    w.csv("trajectory.csv", trajectory_csv(t));
    summary = to_json(t);
    w.json_file("trajectory.json", summary);
    return kExitOk;
}

int run_enclosure_check(const ExperimentConfig& cfg, Writer& w, json& summary)
{
    const BoundaryCoupling coupling = cfg.coupling.build();
    std::vector<double> eps = cfg.sweep.epsilons;
    if (eps.empty()) eps.push_back(cfg.grid.epsilon);
    std::vector<SpectrumReport> reports;
    json violations = json::array(), per_eps = json::array();
    bool complete = true;
    for (double e : eps) {
        const OperatorSet ops = assemble_operators(cfg.grid.build(e), coupling);
        reports.push_back(spectrum_for(cfg, ops, OperatorKind::H_eps, coupling.kind()));
        const json rj = to_json(reports.back());
        for (const auto& v : rj["violations"]) violations.push_back(json{{"epsilon", e}, {"violation", v}});
        per_eps.push_back(rj);
        complete = complete && reports.back().complete;
    }
    w.csv("enclosure.csv", spectrum_csv(reports));
    summary = {{"violations", violations}, {"passed", violations.empty()}, {"complete", complete}, {"reports", per_eps}};
    w.json_file("enclosure.json", summary);
    if (!violations.empty()) return kExitFailed;
    return complete ? kExitOk : kExitNumerical;
}

int run_selftest_cmd(const ExperimentConfig& cfg, Writer& w, json& summary)
{
    const SelftestReport r = run_selftest(cfg.solver.selftest_samples, cfg.solver.seed.value_or(1));
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"value", c.value},
                          {"tolerance", c.tolerance},
                          {"detail", c.detail}});
    summary = {{"passed", r.passed()}, {"checks", checks}};
    w.json_file("selftest.json", summary);
    return r.passed() ? kExitOk : kExitFailed;
}

json manifest(const ExperimentConfig& cfg, const Writer& w, const std::string& started, const std::string& finished,
              double wall, int exit_code, int threads)
{
    json outs = json::array();
    for (const auto& name : w.outputs()) {
        const std::string bytes = read_file(w.dir() / name);
        outs.push_back({{"path", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    return {{"config_hash", config_hash(cfg)},
            {"tool_version", tool_version()},
            {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
            {"command", to_string(cfg.command)},
            {"started_at", started},
            {"finished_at", finished},
            {"wall_time_seconds", wall},
            {"threads", threads},
            {"exit_code", exit_code},
            {"outputs", outs}};
}

} // namespace

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& options)
{
    if (options.out_dir) cfg.output.directory = *options.out_dir;
    if (options.seed) cfg.solver.seed = *options.seed;
    if (options.formats) cfg.output.formats = *options.formats;
    return cfg;
}

RunResult run(const ExperimentConfig& config, const RunOptions& options)
{
    const ExperimentConfig cfg = apply_overrides(config, options);
    const int threads = std::max(1, options.threads);
    RunResult result;
    result.out_dir = cfg.output.directory;
    const auto t0 = std::chrono::system_clock::now();
    const auto s0 = std::chrono::steady_clock::now();
    fs::create_directories(cfg.output.directory);
    Writer w(cfg.output.directory, cfg.output);

    auto fail = [&](int code, const std::string& type, const std::string& message) {
        result.exit_code = code;
        result.error = message;
        const json err{{"status", "error"}, {"exit_code", code}, {"type", type}, {"message", message}};
        result.summary = err;
        w.write("error.json", dump_json(err));
    };
    try {
        w.write("config.json", dump_json(to_json(cfg)));
        if (cfg.command == Command::resolvent_sweep && !cfg.solver.seed)
            throw ConfigError("a seed is required for randomized norm estimates");
        json summary;
        switch (cfg.command) {
        case Command::assemble: result.exit_code = run_assemble(cfg, w, summary); break;
        case Command::resolvent_sweep: result.exit_code = run_resolvent_sweep(cfg, threads, w, summary); break;
        case Command::spectrum: result.exit_code = run_spectrum(cfg, w, summary); break;
        case Command::weak_coupling: result.exit_code = run_weak_coupling(cfg, w, summary); break;
        case Command::trajectory: result.exit_code = run_trajectory(cfg, threads, w, summary); break;
        case Command::enclosure_check: result.exit_code = run_enclosure_check(cfg, w, summary); break;
        case Command::selftest: result.exit_code = run_selftest_cmd(cfg, w, summary); break;
        }
        result.summary = std::move(summary);
        if (result.exit_code == kExitNumerical)
            w.write("error.json", dump_json(json{{"status", "error"},
                                                 {"exit_code", kExitNumerical},
                                                 {"type", "no_convergence"},
                                                 {"message", "some estimates did not converge; see the reports"}}));
    } catch (const ConfigError& e) {
        fail(kExitConfig, "config", e.what());
    } catch (const HypothesisError& e) {
        fail(kExitConfig, "hypothesis", e.what());
    } catch (const GridError& e) {
        fail(kExitConfig, "grid", e.what());
    } catch (const NoConvergenceError& e) {
        fail(kExitNumerical, "no_convergence", e.what());
    } catch (const SingularPencilError& e) {
        fail(kExitNumerical, "singular", e.what());
    } catch (const std::exception& e) {
        fail(kExitFailed, "runtime", e.what());
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
    const json m = manifest(cfg, w, utc_timestamp(t0), utc_timestamp(std::chrono::system_clock::now()), wall,
                            result.exit_code, threads);
    atomic_write((fs::path(cfg.output.directory) / "manifest.json").string(), dump_json(m));
    result.outputs = w.outputs();
    result.outputs.push_back("manifest.json");
    return result;
}

} // namespace robin
