#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "opinf/fom/grid.hpp"

namespace opinf::fom {

/// Tanh transition between k0 and k1 centered at Tc with width w.
inline double heat_kappa(double T, const HeatParams& p) {
    return 0.5 * (p.k0 + p.k1) + 0.5 * (p.k1 - p.k0) * std::tanh((T - p.Tc) / p.w);
}

/// Five-point div(kappa grad T) + 1 on interior nodes, with face diffusivity
/// the arithmetic mean of the adjacent nodal values. Dirichlet boundary rows
/// return 0 (the boundary is held fixed).
inline Vec heat_rhs(const Vec& T, const Grid2D& grid, const HeatParams& p) {
    require(T.size() == grid.n_nodes(), "heat_rhs: state length != node count");
    const double ix2 = 1.0 / (grid.hx() * grid.hx());
    const double iy2 = 1.0 / (grid.hy() * grid.hy());
    Vec kappa(T.size());
    for (Index n = 0; n < T.size(); ++n) kappa[n] = heat_kappa(T[n], p);
    Vec rhs = Vec::Zero(T.size());
    for (Index j = 1; j < grid.ny; ++j) {
        for (Index i = 1; i < grid.nx; ++i) {
            const Index c = grid.node(i, j);
            const Index e = grid.node(i + 1, j), w = grid.node(i - 1, j);
            const Index n = grid.node(i, j + 1), s = grid.node(i, j - 1);
            const double ke = 0.5 * (kappa[c] + kappa[e]);
            const double kw = 0.5 * (kappa[c] + kappa[w]);
            const double kn = 0.5 * (kappa[c] + kappa[n]);
            const double ks = 0.5 * (kappa[c] + kappa[s]);
            rhs[c] = ix2 * (ke * (T[e] - T[c]) - kw * (T[c] - T[w])) +
                     iy2 * (kn * (T[n] - T[c]) - ks * (T[c] - T[s])) + 1.0;
        }
    }
    return rhs;
}

namespace detail {

/// Maps interior nodes to contiguous unknown indices for the implicit solve.
struct InteriorMap {
    std::vector<Index> to_unknown;  // node -> unknown index, -1 on boundary
    std::vector<Index> to_node;     // unknown index -> node

    explicit InteriorMap(const Grid2D& grid) : to_unknown(grid.n_nodes(), -1) {
        for (Index j = 1; j < grid.ny; ++j)
            for (Index i = 1; i < grid.nx; ++i) {
                to_unknown[grid.node(i, j)] = static_cast<Index>(to_node.size());
                to_node.push_back(grid.node(i, j));
            }
    }
};

/// Assembles M = I - (dt/2) D(kappa) on interior unknowns. Boundary values
/// are identically zero, so boundary couplings drop out of the system.
inline Eigen::SparseMatrix<double> cn_matrix(const Grid2D& grid, const Vec& kappa, double dt,
                                             const InteriorMap& map) {
    const double ix2 = 1.0 / (grid.hx() * grid.hx());
    const double iy2 = 1.0 / (grid.hy() * grid.hy());
    const double half_dt = 0.5 * dt;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(map.to_node.size() * 5);
    for (Index j = 1; j < grid.ny; ++j) {
        for (Index i = 1; i < grid.nx; ++i) {
            const Index c = grid.node(i, j);
            const Index row = map.to_unknown[c];
            const Index e = grid.node(i + 1, j), w = grid.node(i - 1, j);
            const Index n = grid.node(i, j + 1), s = grid.node(i, j - 1);
            const double ke = 0.5 * (kappa[c] + kappa[e]);
            const double kw = 0.5 * (kappa[c] + kappa[w]);
            const double kn = 0.5 * (kappa[c] + kappa[n]);
            const double ks = 0.5 * (kappa[c] + kappa[s]);
            const double diag = ix2 * (ke + kw) + iy2 * (kn + ks);
            trip.emplace_back(row, row, 1.0 + half_dt * diag);
            if (map.to_unknown[e] >= 0) trip.emplace_back(row, map.to_unknown[e], -half_dt * ix2 * ke);
            if (map.to_unknown[w] >= 0) trip.emplace_back(row, map.to_unknown[w], -half_dt * ix2 * kw);
            if (map.to_unknown[n] >= 0) trip.emplace_back(row, map.to_unknown[n], -half_dt * iy2 * kn);
            if (map.to_unknown[s] >= 0) trip.emplace_back(row, map.to_unknown[s], -half_dt * iy2 * ks);
        }
    }
    Eigen::SparseMatrix<double> M(static_cast<Index>(map.to_node.size()),
                                  static_cast<Index>(map.to_node.size()));
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

}  // namespace detail

/// One Crank-Nicolson step T+ = T + (dt/2)[rhs(T) + rhs(T+)] solved by Picard
/// iteration with the diffusivity lagged one iterate; each iterate is a
/// symmetric positive definite solve on the interior unknowns.
inline Vec crank_nicolson_step(const Vec& T, const Grid2D& grid, const HeatParams& p, double dt,
                               double tol = 1e-10, int max_iters = 100) {
    require(dt > 0.0, "crank_nicolson_step: dt must be positive");
    require(T.size() == grid.n_nodes(), "crank_nicolson_step: state length != node count");
    const detail::InteriorMap map(grid);
    const Index m = static_cast<Index>(map.to_node.size());

    const Vec rhs_old = heat_rhs(T, grid, p);
    Vec b(m);
    for (Index r = 0; r < m; ++r) {
        const Index node = map.to_node[r];
        b[r] = T[node] + 0.5 * dt * (rhs_old[node] + 1.0);
    }

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    Vec next = T;
    bool analyzed = false;
    double update = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vec kappa(T.size());
        for (Index n = 0; n < T.size(); ++n) kappa[n] = heat_kappa(next[n], p);
        const Eigen::SparseMatrix<double> M = detail::cn_matrix(grid, kappa, dt, map);
        if (!analyzed) {
            solver.analyzePattern(M);
            analyzed = true;
        }
        solver.factorize(M);
        if (solver.info() != Eigen::Success)
            throw SolverError("crank_nicolson_step: factorization failed");
        const Vec sol = solver.solve(b);
        Vec candidate = Vec::Zero(T.size());
        for (Index r = 0; r < m; ++r) candidate[map.to_node[r]] = sol[r];
        update = (candidate - next).norm();
        next = candidate;
        if (update <= tol) return next;
    }
    throw SolverError("crank_nicolson_step: Picard iteration did not reach " +
                      std::to_string(tol) + " (last update " + std::to_string(update) + ")");
}

}  // namespace opinf::fom
