#pragma once

#include "opinf/common.hpp"

namespace opinf::fom {

/// Uniform periodic 1D grid; state is sampled at nodes x_j = j*dx.
struct Grid1D {
    Index n_cells;
    double length;

    Grid1D(Index n_cells_, double length_) : n_cells(n_cells_), length(length_) {
        require(n_cells > 0 && length > 0.0, "Grid1D: n_cells and length must be positive");
    }

    double dx() const { return length / static_cast<double>(n_cells); }
    double node(Index j) const { return static_cast<double>(j) * dx(); }
    /// Periodic wrap of any (possibly negative) index.
    Index wrap(Index j) const {
        const Index m = j % n_cells;
        return m < 0 ? m + n_cells : m;
    }
};

/// Uniform grid on the unit square with (nx+1) x (ny+1) nodes.
struct Grid2D {
    Index nx;
    Index ny;

    Grid2D(Index nx_, Index ny_) : nx(nx_), ny(ny_) {
        require(nx > 0 && ny > 0, "Grid2D: interval counts must be positive");
    }

    double hx() const { return 1.0 / static_cast<double>(nx); }
    double hy() const { return 1.0 / static_cast<double>(ny); }
    Index n_nodes() const { return (nx + 1) * (ny + 1); }
    Index node(Index i, Index j) const { return j * (nx + 1) + i; }
    bool on_boundary(Index i, Index j) const { return i == 0 || i == nx || j == 0 || j == ny; }
};

/// Constants of the tanh diffusivity law plus the parameter vector (k1, Tc).
struct HeatParams {
    double k0 = 1e-2;
    double k1 = 0.2;
    double w = 2e-2;
    double Tc = 0.3;

    HeatParams() = default;
    HeatParams(double k1_, double Tc_) : k1(k1_), Tc(Tc_) { validate(); }
    HeatParams(double k0_, double k1_, double w_, double Tc_) : k0(k0_), k1(k1_), w(w_), Tc(Tc_) {
        validate();
    }

    void validate() const {
        require(k0 > 0.0 && k1 > k0 && w > 0.0, "HeatParams: need k0 > 0, k1 > k0, w > 0");
    }

    Vec mu() const {
        Vec m(2);
        m << k1, Tc;
        return m;
    }
};

}  // namespace opinf::fom
