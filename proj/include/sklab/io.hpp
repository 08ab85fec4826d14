#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sklab/diffusion.hpp"
#include "sklab/errors.hpp"
#include "sklab/fluid.hpp"
#include "sklab/grid.hpp"
#include "sklab/multidim.hpp"
#include "sklab/simulate.hpp"
#include "sklab/stats.hpp"

namespace sklab {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

inline std::string field_to_csv(const FluidField& f) {
    std::string out = "x,y,u,u_x,u_y\n";
    char buf[128];
    for (int i = 0; i < f.nx(); ++i) {
        for (int j = 0; j < f.ny(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          f.grid.coord(0, i), f.grid.coord(1, j), f.u[f.idx(i, j)],
                          f.ux[f.idx(i, j)], f.uy[f.idx(i, j)]);
            out += buf;
        }
    }
    return out;
}

inline std::string ensemble_to_csv(const PathEnsemble& ens) {
    std::string out = "path,s,reward,supplied\n";
    char buf[128];
    for (int k = 0; k < ens.n_paths; ++k) {
        for (int i = 0; i < ens.n_steps(); ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g\n", k, ens.t0 + i,
                          ens.rewards[k][i], ens.supplied[k][i]);
            out += buf;
        }
    }
    return out;
}

// Per-period ensemble summary with a normal-approximation 95% CI on the mean.
inline std::string ensemble_summary_csv(const PathEnsemble& ens) {
    std::string out = "s,mean,var,ci_lo,ci_hi\n";
    char buf[160];
    std::vector<double> col(ens.n_paths);
    for (int i = 0; i < ens.n_steps(); ++i) {
        for (int k = 0; k < ens.n_paths; ++k) col[k] = ens.rewards[k][i];
        const double m = mean(col);
        const double v = sample_variance(col);
        const double half = 1.959963984540054 * std::sqrt(v / ens.n_paths);
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", ens.t0 + i, m, v,
                      m - half, m + half);
        out += buf;
    }
    return out;
}

inline std::string fluctuation_report_csv(const FluctuationReport& r) {
    std::string out = "t,var_empirical,var_sde,ks_stat,ks_crit\n";
    char buf[160];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", row.t,
                      row.var_empirical, row.var_sde, r.ks_stat, r.ks_crit_1pct);
        out += buf;
    }
    return out;
}

inline std::string variance_scaling_csv(const std::vector<VarianceScalingRow>& rows) {
    std::string out = "n,var_over_n,ci_lo,ci_hi\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.n, r.var_over_n, r.ci_lo,
                      r.ci_hi);
        out += buf;
    }
    return out;
}

// Binary grid file: magic "SKGRID01", u32 axis count, then per axis a u64
// node count and f64 extent, then the node values row-major (axis 0
// slowest). All fields little-endian f64/u64; written on LE hosts as-is.
inline void write_grid_binary(const std::filesystem::path& path, const NdGrid& grid,
                              const std::vector<double>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write("SKGRID01", 8);
    const std::uint32_t nd = static_cast<std::uint32_t>(grid.ndim());
    out.write(reinterpret_cast<const char*>(&nd), sizeof(nd));
    for (int k = 0; k < grid.ndim(); ++k) {
        const std::uint64_t n = static_cast<std::uint64_t>(grid.shape[k]);
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        out.write(reinterpret_cast<const char*>(&grid.extent[k]), sizeof(double));
    }
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path.string());
}

inline std::pair<NdGrid, std::vector<double>> read_grid_binary(
    const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "SKGRID01", 8) != 0)
        throw IoError("bad magic in " + path.string());
    std::uint32_t nd = 0;
    in.read(reinterpret_cast<char*>(&nd), sizeof(nd));
    if (!in || nd == 0 || nd > 8) throw IoError("bad axis count in " + path.string());
    NdGrid grid;
    for (std::uint32_t k = 0; k < nd; ++k) {
        std::uint64_t n = 0;
        double extent = 0.0;
        in.read(reinterpret_cast<char*>(&n), sizeof(n));
        in.read(reinterpret_cast<char*>(&extent), sizeof(extent));
        grid.shape.push_back(static_cast<int>(n));
        grid.extent.push_back(extent);
    }
    if (!in) throw IoError("truncated header in " + path.string());
    grid.validate();
    std::vector<double> data(grid.size());
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw IoError("truncated data in " + path.string());
    return {std::move(grid), std::move(data)};
}

inline void write_field_binary(const std::filesystem::path& path, const FluidField& f) {
    write_grid_binary(path, f.grid, f.u);
}

inline FluidField read_field_binary(const std::filesystem::path& path) {
    auto [grid, data] = read_grid_binary(path);
    if (grid.ndim() != 2) throw IoError("expected a 2-axis grid in " + path.string());
    FluidField f;
    f.grid = std::move(grid);
    f.u = std::move(data);
    detail::fill_derivatives(f);
    return f;
}

inline void write_multi_field_binary(const std::filesystem::path& path,
                                     const MultiFluidField& f) {
    write_grid_binary(path, f.grid, f.u);
}

inline MultiFluidField read_multi_field_binary(const std::filesystem::path& path) {
    auto [grid, data] = read_grid_binary(path);
    MultiFluidField f;
    f.grid = std::move(grid);
    f.u = std::move(data);
    detail::fill_multi_derivatives(f);
    return f;
}

} // namespace sklab
