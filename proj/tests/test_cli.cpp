#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "robin/config.hpp"
#include "robin/errors.hpp"
#include "robin/experiments.hpp"
#include "robin/report_io.hpp"

using namespace robin;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("robin_cli_" + name);
    fs::remove_all(p);
    return p;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

std::string read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json sweep_doc()
{
    return json::parse(R"({
      "command": "resolvent-sweep",
      "coupling": {"kind": "constant", "alpha0": 0.0},
      "grid": {"d": 2, "L": 3.0, "n_lat": 31, "lateral_bc": "dirichlet", "refine": false},
      "sweep": {"epsilons": [0.2, 0.1, 0.05, 0.025]},
      "solver": {"seed": 3, "probes": 4}
    })");
}

std::size_t count_errors(const std::vector<Diagnostic>& d)
{
    std::size_t n = 0;
    for (const auto& x : d) n += x.severity == "error";
    return n;
}

} // namespace

TEST(Validate, ShippedConfigsAreClean)
{
    for (const auto& entry : fs::directory_iterator(ROBIN_SOURCE_DIR "/configs")) {
        if (entry.path().extension() != ".json") continue;
        const auto diags = validate_file(entry.path().string());
        EXPECT_TRUE(diags.empty()) << entry.path() << ": " << diags.front().message;
    }
}

TEST(Validate, SharpStepSweepIsOneError)
{
    auto doc = sweep_doc();
    doc["coupling"] = json{{"kind", "step"}, {"alpha0", 1.0}, {"c", -0.5}, {"half_width", 1.0}, {"smoothing", 0.0}};
    const auto d = validate(doc);
    ASSERT_EQ(count_errors(d), 1u);
    EXPECT_NE(d[0].message.find("W1_inf"), std::string::npos);
    EXPECT_THROW(parse_config(doc), ConfigError);
}

TEST(Validate, SingleTransverseNodeIsOneError)
{
    auto doc = sweep_doc();
    doc["grid"]["n_trans"] = 1;
    const auto d = validate(doc);
    ASSERT_EQ(count_errors(d), 1u);
    EXPECT_EQ(d[0].path, "/grid/n_trans");
}

TEST(Validate, StructuralErrors)
{
    auto doc = sweep_doc();
    doc["grid"]["bogus"] = 1;
    EXPECT_EQ(count_errors(validate(doc)), 1u);
    doc = sweep_doc();
    doc["sweep"]["epsilons"] = json::array({0.2, 0.1, 0.05});
    EXPECT_GE(count_errors(validate(doc)), 1u);
    doc = sweep_doc();
    doc["solver"].erase("seed");
    EXPECT_EQ(count_errors(validate(doc)), 1u);
    doc = sweep_doc();
    doc["command"] = "frobnicate";
    EXPECT_GE(count_errors(validate(doc)), 1u);
    doc = sweep_doc();
    doc["command"] = "weak-coupling";
    doc.erase("sweep");
    EXPECT_GE(count_errors(validate(doc)), 1u);
}

TEST(Config, RoundTripAndHash)
{
    const auto cfg = parse_config(sweep_doc());
    EXPECT_EQ(parse_config(to_json(cfg)), cfg);
    EXPECT_EQ(config_hash(cfg), config_hash(parse_config(to_json(cfg))));
    EXPECT_EQ(config_hash(cfg).size(), 64u);
    auto moved = cfg;
    moved.output.directory = "elsewhere";
    EXPECT_EQ(config_hash(moved), config_hash(cfg));
    auto other = cfg;
    other.solver.probes += 1;
    EXPECT_NE(config_hash(other), config_hash(cfg));
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, Overrides)
{
    const auto cfg = parse_config(sweep_doc());
    RunOptions o;
    o.seed = 99;
    o.formats = std::vector<std::string>{"json"};
    o.out_dir = "x";
    const auto c2 = apply_overrides(cfg, o);
    EXPECT_EQ(c2.solver.seed, 99u);
    EXPECT_TRUE(c2.output.wants("json"));
    EXPECT_FALSE(c2.output.wants("csv"));
    EXPECT_EQ(c2.output.directory, "x");
}

TEST(Format, ShortestRoundTripDoubles)
{
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(std::stod(format_double(2.0 / 7.0)), 2.0 / 7.0);
}

TEST(Run, AssembleManifestListsEveryOutput)
{
    const auto dir = scratch("assemble");
    const auto cfg = load_config(ROBIN_SOURCE_DIR "/configs/assemble_small.json");
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(cfg, o);
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    EXPECT_EQ(r.outputs.back(), "manifest.json");
    const auto m = read_json(dir / "manifest.json");
    EXPECT_EQ(m["config_hash"], config_hash(cfg));
    EXPECT_EQ(m["command"], "assemble");
    EXPECT_EQ(m["exit_code"], 0);
    std::set<std::string> listed;
    for (const auto& e : m["outputs"]) {
        const std::string p = e["path"];
        listed.insert(p);
        EXPECT_EQ(e["bytes"].get<std::uintmax_t>(), fs::file_size(dir / p));
        EXPECT_EQ(e["sha256"], sha256_hex(read_bytes(dir / p)));
    }
    std::set<std::string> on_disk;
    for (const auto& f : fs::directory_iterator(dir))
        if (f.path().filename() != "manifest.json") on_disk.insert(f.path().filename().string());
    EXPECT_EQ(listed, on_disk);
    // exported matrices read back
    const auto k = ComplexSparseMatrix::read_matrix_market((dir / "H_eps.mtx").string());
    EXPECT_EQ(k.rows(), 21 * 4);
    fs::remove_all(dir);
}

TEST(Run, ZeroCouplingSweepReportsRates)
{
    const auto dir = scratch("sweep");
    RunOptions o;
    o.out_dir = dir.string();
    o.threads = 4;
    const auto r = run(parse_config(sweep_doc()), o);
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    const auto j = read_json(dir / "resolvent_sweep.json");
    ASSERT_EQ(j["reports"].size(), 4u);
    EXPECT_NEAR(j["fit_W1"]["slope"].get<double>(), 1.0, 0.1);
    EXPECT_NEAR(j["fit_L2"]["slope"].get<double>(), 2.0, 0.1);
    std::ifstream csv(dir / "resolvent_sweep.csv");
    std::string line;
    int rows = 0;
    std::getline(csv, line);
    EXPECT_NE(line.find("epsilon"), std::string::npos);
    while (std::getline(csv, line))
        if (!line.empty() && line[0] != '#') ++rows;
    EXPECT_EQ(rows, 4);
    fs::remove_all(dir);
}

TEST(Run, CsvBytesAreReproducible)
{
    const auto a = scratch("repro_a"), b = scratch("repro_b");
    const auto cfg = parse_config(sweep_doc());
    RunOptions oa, ob;
    oa.out_dir = a.string();
    ob.out_dir = b.string();
    oa.threads = 1;
    ob.threads = 4;
    ASSERT_EQ(run(cfg, oa).exit_code, kExitOk);
    ASSERT_EQ(run(cfg, ob).exit_code, kExitOk);
    EXPECT_EQ(read_bytes(a / "resolvent_sweep.csv"), read_bytes(b / "resolvent_sweep.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Run, NonConvergenceExitsThreeWithErrorJson)
{
    const auto dir = scratch("unconverged");
    auto doc = sweep_doc();
    doc["solver"]["opnorm_max_iter"] = 2;
    doc["solver"]["opnorm_rel_tol"] = 1e-15;
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(parse_config(doc), o);
    EXPECT_EQ(r.exit_code, kExitNumerical);
    ASSERT_TRUE(fs::exists(dir / "error.json"));
    const auto e = read_json(dir / "error.json");
    EXPECT_EQ(e["exit_code"], kExitNumerical);
    EXPECT_TRUE(fs::exists(dir / "resolvent_sweep.json"));
    EXPECT_EQ(read_json(dir / "manifest.json")["exit_code"], kExitNumerical);
    fs::remove_all(dir);
}

TEST(Run, InvalidConfigExitsTwo)
{
    const auto dir = scratch("invalid");
    auto cfg = parse_config(sweep_doc());
    cfg.grid.n_trans = 1;
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(cfg, o);
    EXPECT_EQ(r.exit_code, kExitConfig);
    ASSERT_TRUE(fs::exists(dir / "error.json"));
    EXPECT_EQ(read_json(dir / "error.json")["exit_code"], kExitConfig);
    fs::remove_all(dir);
}

TEST(Run, SelftestPasses)
{
    const auto dir = scratch("selftest");
    auto cfg = load_config(ROBIN_SOURCE_DIR "/configs/selftest.json");
    cfg.solver.selftest_samples = 20000;
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(cfg, o);
    EXPECT_EQ(r.exit_code, kExitOk) << r.error;
    const auto j = read_json(dir / "selftest.json");
    EXPECT_TRUE(j["passed"].get<bool>());
    fs::remove_all(dir);
}

TEST(Run, EnclosureCheckHasNoViolations)
{
    const auto dir = scratch("enclosure");
    const auto doc = json::parse(R"({
      "command": "enclosure-check",
      "coupling": {"kind": "gauss", "alpha0": 1.0, "c": 1.0, "amplitude": 0.5, "sigma": 1.0},
      "grid": {"d": 2, "L": 6.0, "n_lat": 61, "n_trans": 6},
      "sweep": {"epsilons": [0.2, 0.1]},
      "spectrum": {"operator": "H_eps", "k": 4}
    })");
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(parse_config(doc), o);
    EXPECT_EQ(r.exit_code, kExitOk) << r.error;
    const auto j = read_json(dir / "enclosure.json");
    EXPECT_TRUE(j["violations"].empty());
    EXPECT_TRUE(j["passed"].get<bool>());
    fs::remove_all(dir);
}

TEST(Run, SpectrumOutputs)
{
    const auto dir = scratch("spectrum");
    auto cfg = load_config(ROBIN_SOURCE_DIR "/configs/step_spectrum.json");
    RunOptions o;
    o.out_dir = dir.string();
    auto r = run(cfg, o);
    ASSERT_EQ(r.exit_code, kExitOk) << r.error;
    const auto j = read_json(dir / "spectrum.json");
    EXPECT_EQ(j["below_threshold"].size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "spectrum.csv"));
    fs::remove_all(dir);
}
