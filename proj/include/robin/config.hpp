#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robin/assembly.hpp"
#include "robin/linalg.hpp"
#include "robin/model.hpp"
#include "robin/spectral.hpp"

namespace robin {

enum class Command { assemble, resolvent_sweep, spectrum, weak_coupling, trajectory, enclosure_check, selftest };

std::string to_string(Command cmd);
std::optional<Command> parse_command(const std::string& s);

/// Coupling description as written in a config file. `kind` is one of
/// "constant", "step", "gauss" or "sampled:<path>".
struct CouplingSpec {
    std::string kind = "constant";
    double alpha0 = 0.0;
    double c = 0.0;
    double half_width = 1.0; // step
    double amplitude = 1.0;  // step, gauss
    double smoothing = 0.0;  // step
    double sigma = 1.0;      // gauss

    bool operator==(const CouplingSpec&) const = default;

    bool is_sampled() const { return kind.rfind("sampled:", 0) == 0; }
    std::string sample_path() const { return is_sampled() ? kind.substr(8) : std::string(); }
    /// Throws ConfigError for an unknown kind; sampled paths are read here.
    BoundaryCoupling build() const;
};

struct GridSpec {
    int d = 2;
    double L = 12.0;
    Index n_lat = 241;
    double epsilon = 0.1;
    Index n_trans = 0; // 0 = automatic
    LateralBC lateral_bc = LateralBC::dirichlet;
    bool refine = true; // resolvent-sweep: Richardson comparison with a refined grid

    bool operator==(const GridSpec&) const = default;
    LayerGrid build(double epsilon) const;
    LayerGrid build() const { return build(epsilon); }
};

struct SweepSpec {
    std::vector<double> epsilons;
    std::vector<double> c_values;
    bool operator==(const SweepSpec&) const = default;
};

struct SpectrumSpec {
    OperatorKind op = OperatorKind::H_eps;
    int k = 6;
    /// Shift-invert target; absent means "lowest eigenvalues".
    std::optional<cplx> near;
    bool operator==(const SpectrumSpec&) const = default;
};

struct SolverSpec {
    SolverMethod method = SolverMethod::sparse_lu;
    double tolerance = 1e-10;
    int max_iter = 2000;
    std::optional<std::uint64_t> seed;
    int probes = 50;
    int opnorm_max_iter = 1000;
    double opnorm_rel_tol = 1e-6;
    double arnoldi_tol = 1e-10;
    std::int64_t selftest_samples = 1'000'000;
    bool operator==(const SolverSpec&) const = default;
};

struct OutputSpec {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
    bool operator==(const OutputSpec&) const = default;
    bool wants(const std::string& fmt) const;
};

struct ExperimentConfig {
    Command command = Command::selftest;
    CouplingSpec coupling;
    GridSpec grid;
    SweepSpec sweep;
    SpectrumSpec spectrum;
    SolverSpec solver;
    OutputSpec output;

    bool operator==(const ExperimentConfig&) const = default;
};

struct Diagnostic {
    std::string severity; // "error" or "warning"
    std::string path;     // JSON pointer into the config
    std::string message;
};

/// Schema and hypothesis checks on a raw config document; empty when valid.
std::vector<Diagnostic> validate(const nlohmann::json& doc);
/// Reads and validates a file; throws std::runtime_error when it cannot be read or parsed.
std::vector<Diagnostic> validate_file(const std::string& path);

/// Parses a document; throws ConfigError listing the diagnostics when invalid.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Full form with every field; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// SHA-256 (hex) of the canonical serialization, output directory excluded.
std::string config_hash(const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& bytes);

} // namespace robin
