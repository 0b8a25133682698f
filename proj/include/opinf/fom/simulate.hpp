#pragma once

#include <cmath>
#include <string>
#include <variant>

#include "opinf/fom/burgers.hpp"
#include "opinf/fom/heat.hpp"
#include "opinf/fom/integrators.hpp"
#include "opinf/io.hpp"

namespace opinf::fom {

/// Time-indexed full-order states and exact right-hand-side samples for one
/// parameter realization.
struct Trajectory {
    Mat states;  // N x N_t
    Mat rhs;     // N x N_t, f evaluated at the stored states
    Vec times;   // N_t
    Vec params;  // parameter vector mu (may be empty)

    Index state_dim() const { return states.rows(); }
    Index n_steps() const { return states.cols(); }

    void validate() const {
        require(states.cols() == rhs.cols() && states.rows() == rhs.rows(),
                "Trajectory: states and rhs shapes disagree");
        require(times.size() == states.cols(), "Trajectory: times length != column count");
        for (Index i = 1; i < times.size(); ++i)
            require(times[i] > times[i - 1], "Trajectory: times must be strictly increasing");
    }
};

struct SimulateOptions {
    double t_final = 1.0;
    double dt = 1e-2;
    Index stride = 1;  // store every stride-th step (t=0 always stored)
};

namespace detail {

inline Index step_count(double t_final, double dt) {
    require(t_final >= 0.0 && dt > 0.0, "simulate: need t_final >= 0 and dt > 0");
    return static_cast<Index>(std::llround(t_final / dt));
}

template <typename Stepper, typename RhsEval>
Trajectory run(const Vec& x0, const Vec& params, const SimulateOptions& opt, Stepper&& step,
               RhsEval&& rhs_eval) {
    require(opt.stride >= 1, "simulate: stride must be >= 1");
    const Index n_steps = step_count(opt.t_final, opt.dt);
    const Index n_stored = n_steps / opt.stride + 1;

    Trajectory traj;
    traj.states.resize(x0.size(), n_stored);
    traj.rhs.resize(x0.size(), n_stored);
    traj.times.resize(n_stored);
    traj.params = params;

    Vec x = x0;
    Index col = 0;
    auto store = [&](Index k) {
        traj.states.col(col) = x;
        traj.rhs.col(col) = rhs_eval(x);
        traj.times[col] = static_cast<double>(k) * opt.dt;
        ++col;
    };
    store(0);
    for (Index k = 1; k <= n_steps; ++k) {
        x = step(x, static_cast<double>(k - 1) * opt.dt);
        if (k % opt.stride == 0) store(k);
    }
    traj.validate();
    return traj;
}

}  // namespace detail

/// Burgers FOM: RK4 in time, snapshots (state and exact rhs) every `stride` steps.
inline Trajectory simulate_burgers(const Grid1D& grid, const SimulateOptions& opt) {
    auto rhs = [&](double, const Vec& u) { return burgers_rhs(u, grid); };
    return detail::run(
        burgers_initial(grid), Vec(), opt,
        [&](const Vec& u, double t) { return rk4_step(rhs, u, t, opt.dt); },
        [&](const Vec& u) { return burgers_rhs(u, grid); });
}

/// 2D nonlinear heat FOM: Crank-Nicolson in time from T = 0.
inline Trajectory simulate_heat(const Grid2D& grid, const HeatParams& p,
                                const SimulateOptions& opt) {
    return detail::run(
        Vec(Vec::Zero(grid.n_nodes())), p.mu(), opt,
        [&](const Vec& T, double) { return crank_nicolson_step(T, grid, p, opt.dt); },
        [&](const Vec& T) { return heat_rhs(T, grid, p); });
}

enum class FomId { Burgers, Heat };

struct FomSpec {
    FomId id;
    std::variant<Grid1D, Grid2D> grid;
    HeatParams heat;  // used when id == Heat
};

inline Trajectory simulate(const FomSpec& spec, const SimulateOptions& opt) {
    if (spec.id == FomId::Burgers) return simulate_burgers(std::get<Grid1D>(spec.grid), opt);
    return simulate_heat(std::get<Grid2D>(spec.grid), spec.heat, opt);
}

// --- serialization ---------------------------------------------------------
// "OIFTRAJ1", u64 N, u64 N_t, u64 n_params, times, params, states (column
// major), rhs (column major); all payloads little-endian f64.

inline void save_trajectory(const Trajectory& traj, const std::string& path) {
    traj.validate();
    auto os = io::open_out(path);
    io::write_magic(os, "OIFTRAJ1");
    io::write_u64(os, static_cast<std::uint64_t>(traj.state_dim()));
    io::write_u64(os, static_cast<std::uint64_t>(traj.n_steps()));
    io::write_u64(os, static_cast<std::uint64_t>(traj.params.size()));
    io::write_f64(os, traj.times.data(), static_cast<std::size_t>(traj.times.size()));
    io::write_f64(os, traj.params.data(), static_cast<std::size_t>(traj.params.size()));
    io::write_mat(os, traj.states);
    io::write_mat(os, traj.rhs);
    if (!os) throw io::FileError("failed writing trajectory to " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "OIFTRAJ1", path);
    const auto n = static_cast<Index>(io::read_u64(is));
    const auto nt = static_cast<Index>(io::read_u64(is));
    const auto np = static_cast<Index>(io::read_u64(is));
    Trajectory traj;
    traj.times.resize(nt);
    traj.params.resize(np);
    traj.states.resize(n, nt);
    traj.rhs.resize(n, nt);
    io::read_f64(is, traj.times.data(), static_cast<std::size_t>(nt));
    io::read_f64(is, traj.params.data(), static_cast<std::size_t>(np));
    io::read_mat(is, traj.states);
    io::read_mat(is, traj.rhs);
    traj.validate();
    return traj;
}

}  // namespace opinf::fom
