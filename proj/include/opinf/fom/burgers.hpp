#pragma once

#include <cmath>

#include "opinf/fom/grid.hpp"

namespace opinf::fom {

/// Semi-discrete Burgers right-hand side with the skew-symmetric split flux
///   F_{j+1/2} = (u_j^2 + u_j u_{j+1} + u_{j+1}^2) / 6,
/// which conserves the discrete energy exactly: u . rhs(u) = 0.
inline Vec burgers_rhs(const Vec& u, const Grid1D& grid) {
    require(u.size() == grid.n_cells, "burgers_rhs: state length != n_cells");
    const Index n = grid.n_cells;
    const double inv_dx = 1.0 / grid.dx();
    auto flux = [&](Index j) {
        const double a = u[j];
        const double b = u[grid.wrap(j + 1)];
        return (a * a + a * b + b * b) / 6.0;
    };
    Vec rhs(n);
    for (Index j = 0; j < n; ++j) rhs[j] = -(flux(j) - flux(grid.wrap(j - 1))) * inv_dx;
    return rhs;
}

/// u(x, 0) = 0.025 (sin 4x + 2 cos 6x) + 2, sampled at the grid nodes.
inline Vec burgers_initial(const Grid1D& grid) {
    Vec u(grid.n_cells);
    for (Index j = 0; j < grid.n_cells; ++j) {
        const double x = grid.node(j);
        u[j] = 0.025 * (std::sin(4.0 * x) + 2.0 * std::cos(6.0 * x)) + 2.0;
    }
    return u;
}

/// Discrete energy dx * sum_j u_j^2.
inline double energy(const Vec& u, const Grid1D& grid) { return grid.dx() * u.squaredNorm(); }

}  // namespace opinf::fom
