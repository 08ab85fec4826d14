#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sklab/config.hpp"
#include "sklab/demand.hpp"
#include "sklab/diffusion.hpp"
#include "sklab/dp.hpp"
#include "sklab/errors.hpp"
#include "sklab/fluid.hpp"
#include "sklab/io.hpp"
#include "sklab/multidim.hpp"
#include "sklab/simulate.hpp"
#include "sklab/stats.hpp"

namespace sklab {

inline constexpr const char* kLabVersion = "1.0.0";

struct RunResult {
    std::filesystem::path out_dir;
    std::map<std::string, double> metrics;
};

namespace detail {

inline void write_manifest(const std::filesystem::path& out_dir, const ExperimentConfig& cfg,
                           const std::map<std::string, double>& metrics,
                           const std::vector<std::string>& outputs, double wall_ms) {
    nlohmann::json j;
    j["version"] = kLabVersion;
    j["kind"] = kind_name(cfg.kind);
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["config_text"] = cfg.source_text;
    j["outputs"] = outputs;
    j["wall_time_ms"] = wall_ms;
    nlohmann::json m;
    for (const auto& [k, v] : metrics) m[k] = v;
    j["metrics"] = m;
    write_text_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

inline DemandDistribution require_1d(const ExperimentConfig& cfg) {
    if (!cfg.dist_1d)
        throw ValidationError("this experiment kind needs a one-dimensional distribution");
    return *cfg.dist_1d;
}

// Max lattice-node error between the scaled DP and the fluid field:
// max over integer (t,d) of |V(t,d)/n - u(t/n, d/n)|.
inline double scaled_dp_error(const DemandDistribution& dist, const FluidField& field,
                              int n, int W_base, int T_base) {
    const ValueTable table = solve_dp(dist, n * W_base, n * T_base);
    double worst = 0.0;
    for (int t = 0; t <= n * T_base; ++t) {
        for (int d = 0; d <= n * W_base; ++d) {
            const double u = field.interp_u(static_cast<double>(t) / n,
                                            static_cast<double>(d) / n);
            worst = std::max(worst, std::abs(table.value(t, d) / n - u));
        }
    }
    return worst;
}

inline double multi_scaled_dp_error(const MultiDemandDistribution& dist,
                                    const MultiFluidField& field, int n,
                                    const std::vector<int>& W_base, int T_base) {
    std::vector<int> W(W_base.size());
    for (std::size_t k = 0; k < W.size(); ++k) W[k] = n * W_base[k];
    const MultiValueTable table = solve_dp_multi(dist, W, n * T_base);
    double worst = 0.0;
    std::vector<double> point(W.size() + 1);
    for (int t = 0; t <= n * T_base; ++t) {
        point[0] = static_cast<double>(t) / n;
        detail::for_each_lattice_point(W, [&](const std::vector<int>& d) {
            for (std::size_t k = 0; k < W.size(); ++k)
                point[k + 1] = static_cast<double>(d[k]) / n;
            const double u = field.interp_u(point);
            worst = std::max(worst, std::abs(table.value(t, d) / n - u));
        });
    }
    return worst;
}

} // namespace detail

// Executes one experiment and leaves CSV artifacts plus a manifest in the
// configured output directory.
inline RunResult run(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path out_dir = cfg.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    std::map<std::string, double> metrics;
    std::vector<std::string> outputs;
    auto emit = [&](const std::string& name, const std::string& text) {
        write_text_file(out_dir / name, text);
        outputs.push_back(name);
    };

    switch (cfg.kind) {
        case ExperimentKind::dp_check: {
            const auto dist = detail::require_1d(cfg);
            const ValueTable table = solve_dp(dist, cfg.W[0], cfg.T);
            emit("value_table.csv", table.to_csv());
            metrics["value_at_start"] = table.value(cfg.t0, cfg.W[0]);
            const double branches = static_cast<double>(dist.atoms().size() + 1);
            if (std::pow(branches, cfg.T - cfg.t0 + 1) <= 1e5) {
                const double oracle = enumeration_oracle(dist, cfg.W[0], cfg.T, cfg.t0);
                metrics["oracle_value"] = oracle;
                metrics["oracle_abs_diff"] =
                    std::abs(oracle - table.value(cfg.t0, cfg.W[0]));
            }
            break;
        }
        case ExperimentKind::variance_scaling: {
            const auto dist = detail::require_1d(cfg);
            std::vector<int> ladder = cfg.scale_ladder;
            if (ladder.empty()) ladder = {1};
            const auto rows = variance_scaling(dist, cfg.t0, cfg.W[0], cfg.T, ladder,
                                               cfg.paths, cfg.seed, cfg.threads);
            emit("variance_scaling.csv", variance_scaling_csv(rows));
            double lo = rows.front().var_over_n, hi = rows.front().var_over_n;
            for (const auto& r : rows) {
                metrics["var_over_n_" + std::to_string(r.n)] = r.var_over_n;
                lo = std::min(lo, r.var_over_n);
                hi = std::max(hi, r.var_over_n);
            }
            metrics["ratio_max_min"] = lo > 0.0 ? hi / lo : (hi > 0.0 ? 1e300 : 1.0);
            break;
        }
        case ExperimentKind::fluid_convergence: {
            const auto dist = detail::require_1d(cfg);
            auto g = [&dist](double x) { return dist.loss_g(x); };
            auto h = [](double) { return 0.0; };
            const FluidField field = solve_grid(g, h, cfg.T, cfg.W[0], cfg.grid_nx,
                                                cfg.grid_ny);
            emit("fluid_field.csv", field_to_csv(field));
            write_field_binary(out_dir / "fluid_field.skg", field);
            outputs.push_back("fluid_field.skg");
            const auto ma = monge_ampere_residual(field);
            metrics["monge_ampere_max_normalized"] = ma.max_normalized;
            std::string ladder_csv = "n,max_err\n";
            double prev = 0.0;
            bool monotone = true;
            for (std::size_t i = 0; i < cfg.scale_ladder.size(); ++i) {
                const int n = cfg.scale_ladder[i];
                const double err = detail::scaled_dp_error(dist, field, n, cfg.W[0], cfg.T);
                ladder_csv += std::to_string(n) + "," + std::to_string(err) + "\n";
                metrics["err_" + std::to_string(n)] = err;
                if (i > 0 && err > prev) monotone = false;
                prev = err;
            }
            metrics["error_ladder_monotone"] = monotone ? 1.0 : 0.0;
            if (!cfg.scale_ladder.empty()) emit("error_ladder.csv", ladder_csv);
            break;
        }
        case ExperimentKind::diffusion_compare: {
            const auto dist = detail::require_1d(cfg);
            if (!dist.unit_demand())
                throw ValidationError(
                    "diffusion-compare covers unit demand; general batch sizes are an "
                    "experimental simulation mode only");
            const int n = cfg.scale_ladder.empty() ? 100 : cfg.scale_ladder.back();
            const ThresholdMode mode =
                cfg.verbatim_g ? ThresholdMode::verbatim_g : ThresholdMode::accept_prob;
            auto g = [&dist](double x) { return dist.loss_g(x); };
            auto h = [](double) { return 0.0; };
            const FluidField field = solve_grid(g, h, cfg.T, cfg.W[0], cfg.grid_nx,
                                                cfg.grid_ny);
            const double dt = static_cast<double>(cfg.T) / 2048.0;
            const CenterPath center =
                solve_center_ode(field, dist, mode, cfg.W[0], 0.0, cfg.T, dt);
            const ValueTable table = solve_dp(dist, n * cfg.W[0], n * cfg.T);
            const PathEnsemble ens =
                simulate(dist, table, 0, n * cfg.W[0], cfg.paths, cfg.seed, cfg.threads);
            std::vector<double> times;
            for (int q = 1; q <= 4; ++q) times.push_back(cfg.T * q / 4.0);
            const SdePathSet sde =
                simulate_diffusion(field, dist, mode, cfg.W[0], center, 0.0, cfg.T, dt,
                                   cfg.paths, cfg.seed + 1, times, cfg.threads);
            const auto report = fluctuation_compare(ens, sde, dist, n, times);
            emit("diffusion_compare.csv", fluctuation_report_csv(report));
            metrics["ks_stat"] = report.ks_stat;
            metrics["ks_crit_1pct"] = report.ks_crit_1pct;
            const auto& last = report.rows.back();
            metrics["var_ratio_terminal"] =
                last.var_sde > 0.0 ? last.var_empirical / last.var_sde : 0.0;
            metrics["sde_clamped"] = sde.clamped ? 1.0 : 0.0;
            break;
        }
        case ExperimentKind::multi: {
            const MultiValueTable table = solve_dp_multi(cfg.dist_multi, cfg.W, cfg.T);
            emit("multi_value_table.csv", table.to_csv());
            metrics["value_at_start"] = table.value(cfg.t0, cfg.W);
            if (cfg.dim() <= 3) {
                auto G = [&cfg](const std::vector<double>& z) {
                    return cfg.dist_multi.multi_G(z);
                };
                auto h = [](const std::vector<double>&) { return 0.0; };
                std::vector<double> Y(cfg.W.begin(), cfg.W.end());
                std::vector<int> ncap(cfg.dim(), cfg.grid_ny);
                const MultiFluidField field =
                    solve_fluid_multi(G, h, cfg.T, Y, cfg.grid_nx, ncap);
                write_multi_field_binary(out_dir / "multi_fluid_field.skg", field);
                outputs.push_back("multi_fluid_field.skg");
                metrics["hessian_det_max_normalized"] = hessian_det_residual(field);
                std::string ladder_csv = "n,max_err\n";
                for (int n : cfg.scale_ladder) {
                    const double err =
                        detail::multi_scaled_dp_error(cfg.dist_multi, field, n, cfg.W, cfg.T);
                    ladder_csv += std::to_string(n) + "," + std::to_string(err) + "\n";
                    metrics["err_" + std::to_string(n)] = err;
                }
                if (!cfg.scale_ladder.empty()) emit("error_ladder.csv", ladder_csv);
            }
            break;
        }
    }

    const double wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    detail::write_manifest(out_dir, cfg, metrics, outputs, wall_ms);
    return {out_dir, std::move(metrics)};
}

// Aggregates every manifest under `dir` (the directory itself or its
// immediate subdirectories) into one summary. Byte-idempotent.
inline std::string report(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> manifests;
    if (std::filesystem::exists(dir / "manifest.json"))
        manifests.push_back(dir / "manifest.json");
    if (std::filesystem::is_directory(dir)) {
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_directory() &&
                std::filesystem::exists(entry.path() / "manifest.json"))
                manifests.push_back(entry.path() / "manifest.json");
        }
    }
    if (manifests.empty()) throw IoError("no manifest.json under " + dir.string());
    std::sort(manifests.begin(), manifests.end());

    std::string csv = "run,kind,seed,metric,value\n";
    for (const auto& path : manifests) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("corrupt manifest " + path.string() + ": " + e.what());
        }
        const std::string run_name = path.parent_path().filename().string();
        if (!j.contains("kind") || !j.contains("metrics"))
            throw IoError("corrupt manifest " + path.string() + ": missing fields");
        std::vector<std::string> keys;
        for (const auto& [k, v] : j["metrics"].items()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        char buf[64];
        for (const auto& k : keys) {
            std::snprintf(buf, sizeof(buf), "%.17g", j["metrics"][k].get<double>());
            csv += run_name + "," + j["kind"].get<std::string>() + "," +
                   std::to_string(j["seed"].get<std::uint64_t>()) + "," + k + "," + buf +
                   "\n";
        }
    }
    write_text_file(dir / "summary.csv", csv);
    return csv;
}

} // namespace sklab
