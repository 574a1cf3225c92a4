#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robin/config.hpp"

namespace robin {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;    // a check ran and failed (selftest, enclosure-check)
inline constexpr int kExitConfig = 2;    // schema or hypothesis violation
inline constexpr int kExitNumerical = 3; // non-convergence; partial artifacts are kept

std::string tool_version();

struct RunOptions {
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<std::string>> formats;
    int threads = 1;
};

struct RunResult {
    int exit_code = kExitOk;
    std::string out_dir;
    std::vector<std::string> outputs; // relative to out_dir, manifest last
    nlohmann::json summary;
    std::string error;
};

/// Applies the overrides in `options` to `cfg`.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& options);

/// Runs one experiment and writes its artifacts, an error JSON on failure, and the manifest last.
RunResult run(const ExperimentConfig& cfg, const RunOptions& options = {});

} // namespace robin
