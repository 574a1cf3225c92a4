// Batch front end: robinlayer --config run.json [--out dir] [--seed n] [--threads n] [--format csv,json]
//                  robinlayer --validate --config run.json
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "robin/config.hpp"
#include "robin/errors.hpp"
#include "robin/experiments.hpp"

int main(int argc, char** argv)
{
    using nlohmann::json;
    CLI::App app{"Resolvent and spectral studies of thin layers with imaginary Robin coupling"};
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::string> formats;
    bool validate_only = false;
    app.add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides the config)");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    auto* fmt_opt = app.add_option("--format", formats, "output formats")
                        ->delimiter(',')
                        ->check(CLI::IsMember({"csv", "json"}));
    app.add_flag("--validate", validate_only, "check the config and print diagnostics");
    app.set_version_flag("--version", robin::tool_version());
    CLI11_PARSE(app, argc, argv);

    if (validate_only) {
        std::vector<robin::Diagnostic> diags;
        try {
            diags = robin::validate_file(config_path);
        } catch (const std::exception& e) {
            std::cerr << json{{"status", "error"}, {"type", "io"}, {"message", e.what()}}.dump() << "\n";
            return 1;
        }
        json out = json::array();
        bool errors = false;
        for (const auto& d : diags) {
            out.push_back({{"severity", d.severity}, {"path", d.path}, {"message", d.message}});
            errors = errors || d.severity == "error";
        }
        std::cout << out.dump(2) << "\n";
        return errors ? robin::kExitConfig : robin::kExitOk;
    }

    robin::ExperimentConfig cfg;
    try {
        cfg = robin::load_config(config_path);
    } catch (const robin::ConfigError& e) {
        std::cerr << json{{"status", "error"}, {"exit_code", robin::kExitConfig}, {"type", "config"}, {"message", e.what()}}.dump()
                  << "\n";
        return robin::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << json{{"status", "error"}, {"exit_code", 1}, {"type", "io"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }

    robin::RunOptions opts;
    if (*out_opt) opts.out_dir = out_dir;
    if (*seed_opt) opts.seed = seed;
    if (*fmt_opt) opts.formats = formats;
    opts.threads = threads;
    const robin::RunResult res = robin::run(cfg, opts);
    const json line{{"exit_code", res.exit_code}, {"out_dir", res.out_dir}, {"outputs", res.outputs}};
    if (res.exit_code != robin::kExitOk) std::cerr << res.summary.dump() << "\n";
    std::cout << line.dump() << "\n";
    return res.exit_code;
}
