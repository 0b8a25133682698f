#pragma once

#include <functional>

#include "opinf/common.hpp"

namespace opinf::romeval {

/// Reduced trajectory plus bookkeeping for one ROM integration.
struct RomRun {
    Mat trajectory;       // K x N_t (columns past a divergence repeat the last finite state)
    bool stable = true;
    Index truncated_at = -1;  // first column index after divergence, -1 if clean
    double error = -1.0;      // lifted-state relative error, filled by callers
    double wall_time_s = 0.0;
};

/// RK4 over learned reduced dynamics with divergence detection: the run is
/// flagged and truncated when the state norm exceeds 1e6 x the initial norm
/// (guarded to 1e6 when the initial state is zero) or goes non-finite.
template <typename Rhs>
RomRun integrate_rom(Rhs&& rhs, const Vec& x0, const Vec& times) {
    require(times.size() >= 1, "integrate_rom: empty time vector");
    for (Index i = 2; i < times.size(); ++i)
        require(std::abs((times[i] - times[i - 1]) - (times[1] - times[0])) <=
                    1e-10 * std::max(1.0, std::abs(times[1] - times[0])),
                "integrate_rom: times must be uniform");

    RomRun run;
    run.trajectory.resize(x0.size(), times.size());
    run.trajectory.col(0) = x0;
    const double limit = 1e6 * std::max(x0.norm(), 1.0);

    Vec x = x0;
    for (Index i = 1; i < times.size(); ++i) {
        const double dt = times[i] - times[i - 1];
        const Vec k1 = rhs(x);
        const Vec k2 = rhs(Vec(x + 0.5 * dt * k1));
        const Vec k3 = rhs(Vec(x + 0.5 * dt * k2));
        const Vec k4 = rhs(Vec(x + dt * k3));
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite() || x.norm() > limit) {
            run.stable = false;
            run.truncated_at = i;
            for (Index j = i; j < times.size(); ++j) run.trajectory.col(j) = run.trajectory.col(i - 1);
            return run;
        }
        run.trajectory.col(i) = x;
    }
    return run;
}

/// l2 relative state error summed over all time steps:
///   e = sum_i |rom(t_i) - fom(t_i)| / sum_i |fom(t_i)|.
inline double relative_error(const Mat& rom_states, const Mat& fom_states) {
    require(rom_states.rows() == fom_states.rows() && rom_states.cols() == fom_states.cols(),
            "relative_error: shape mismatch");
    const double denom =
        pairwise_sum(0, fom_states.cols(), [&](Index i) { return fom_states.col(i).norm(); });
    if (denom == 0.0) throw DimensionError("relative_error: zero reference trajectory");
    const double num = pairwise_sum(
        0, fom_states.cols(), [&](Index i) { return (rom_states.col(i) - fom_states.col(i)).norm(); });
    return num / denom;
}

}  // namespace opinf::romeval
