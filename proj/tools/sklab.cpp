// sklab: stochastic knapsack laboratory CLI.
//
// Verbs: solve, simulate, fluid, diffuse, multi (each runs a pipeline from
// a config document) and report (aggregates manifests). Flags override
// config fields. Exit codes: 0 ok, 2 validation, 3 resource, 4 numerical,
// 5 io.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sklab/config.hpp"
#include "sklab/errors.hpp"
#include "sklab/io.hpp"
#include "sklab/lab.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string mode;
    std::string scale_ladder;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
    sub->add_option("--config", flags.config_path, "run configuration document")
        ->required();
    sub->add_option("--out", flags.out_dir, "output directory (overrides config)");
    sub->add_option("--mode", flags.mode, "accept-prob | verbatim-g")
        ->check(CLI::IsMember({"accept-prob", "verbatim-g"}));
    sub->add_option("--scale-ladder", flags.scale_ladder,
                    "comma-separated scales, e.g. 10,20,40");
    sub->add_option("--seed", flags.seed, "64-bit RNG seed")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    sub->add_option("--threads", flags.threads, "worker threads for path simulation");
}

int run_pipeline(const CommonFlags& flags, sklab::ExperimentKind kind) {
    const std::filesystem::path cfg_path = flags.config_path;
    sklab::ExperimentConfig cfg = sklab::parse_experiment_config(
        sklab::read_text_file(cfg_path), cfg_path.parent_path());
    cfg.kind = kind;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (!flags.mode.empty()) cfg.verbatim_g = flags.mode == "verbatim-g";
    if (!flags.scale_ladder.empty()) {
        cfg.scale_ladder.clear();
        for (const auto& s : sklab::split_list(flags.scale_ladder))
            cfg.scale_ladder.push_back(std::stoi(s));
    }
    const auto result = sklab::run(cfg);
    std::cout << sklab::kind_name(kind) << ": ok, artifacts in " << result.out_dir.string()
              << "\n";
    for (const auto& [k, v] : result.metrics) std::cout << "  " << k << " = " << v << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic knapsack laboratory"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto* solve = app.add_subcommand("solve", "exact DP value table (dp-check)");
    auto* simulate = app.add_subcommand("simulate", "policy Monte Carlo / variance scaling");
    auto* fluid = app.add_subcommand("fluid", "fluid PDE solve + scaled-DP convergence");
    auto* diffuse = app.add_subcommand("diffuse", "diffusion limit vs scaled fluctuations");
    auto* multi = app.add_subcommand("multi", "multi-dimensional DP + fluid");
    for (auto* sub : {solve, simulate, fluid, diffuse, multi}) add_common(sub, flags);

    std::string report_dir;
    auto* report = app.add_subcommand("report", "aggregate run manifests into a summary");
    report->add_option("dir", report_dir, "artifacts directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (report->parsed()) {
            std::cout << sklab::report(report_dir);
            return 0;
        }
        if (solve->parsed()) return run_pipeline(flags, sklab::ExperimentKind::dp_check);
        if (simulate->parsed())
            return run_pipeline(flags, sklab::ExperimentKind::variance_scaling);
        if (fluid->parsed())
            return run_pipeline(flags, sklab::ExperimentKind::fluid_convergence);
        if (diffuse->parsed())
            return run_pipeline(flags, sklab::ExperimentKind::diffusion_compare);
        if (multi->parsed()) return run_pipeline(flags, sklab::ExperimentKind::multi);
    } catch (const sklab::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return static_cast<int>(sklab::ExitCode::validation);
    } catch (const sklab::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return static_cast<int>(sklab::ExitCode::resource);
    } catch (const sklab::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return static_cast<int>(sklab::ExitCode::numerical);
    } catch (const sklab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return static_cast<int>(sklab::ExitCode::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(sklab::ExitCode::numerical);
    }
    return 0;
}
