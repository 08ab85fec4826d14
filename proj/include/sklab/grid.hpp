#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sklab/errors.hpp"

namespace sklab {

// Dense rectangular grid over [0, extent_0] x ... x [0, extent_{n-1}],
// row-major with axis 0 slowest. Shared by the 1-D and multi-D fluid
// solvers so their interpolation arithmetic is identical.
struct NdGrid {
    std::vector<int> shape;      // nodes per axis, >= 2 each
    std::vector<double> extent;  // upper coordinate per axis, lower is 0

    int ndim() const { return static_cast<int>(shape.size()); }

    std::size_t size() const {
        std::size_t n = 1;
        for (int s : shape) n *= static_cast<std::size_t>(s);
        return n;
    }

    double spacing(int axis) const { return extent[axis] / (shape[axis] - 1); }

    double coord(int axis, int i) const { return i * spacing(axis); }

    std::size_t index(const std::vector<int>& iv) const {
        std::size_t idx = 0;
        for (int k = 0; k < ndim(); ++k) idx = idx * shape[k] + iv[k];
        return idx;
    }

    void validate() const {
        if (shape.size() != extent.size() || shape.empty())
            throw ValidationError("NdGrid: shape/extent mismatch");
        for (int s : shape)
            if (s < 2) throw ValidationError("NdGrid: need at least 2 nodes per axis");
        for (double e : extent)
            if (e <= 0.0) throw ValidationError("NdGrid: extents must be positive");
    }
};

// Multilinear interpolation of a node field at an arbitrary point;
// coordinates clamp to the grid box.
inline double interpolate(const NdGrid& grid, const std::vector<double>& data,
                          const std::vector<double>& point) {
    const int nd = grid.ndim();
    if (static_cast<int>(point.size()) != nd)
        throw ValidationError("interpolate: point dimension mismatch");
    std::vector<int> cell(nd);
    std::vector<double> frac(nd);
    for (int k = 0; k < nd; ++k) {
        double x = point[k];
        if (x < 0.0) x = 0.0;
        if (x > grid.extent[k]) x = grid.extent[k];
        const double h = grid.spacing(k);
        int i = static_cast<int>(x / h);
        if (i > grid.shape[k] - 2) i = grid.shape[k] - 2;
        cell[k] = i;
        frac[k] = x / h - i;
    }
    double sum = 0.0;
    const int corners = 1 << nd;
    std::vector<int> iv(nd);
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        for (int k = 0; k < nd; ++k) {
            const int hi = (c >> k) & 1;
            iv[k] = cell[k] + hi;
            w *= hi ? frac[k] : 1.0 - frac[k];
        }
        sum += w * data[grid.index(iv)];
    }
    return sum;
}

} // namespace sklab
