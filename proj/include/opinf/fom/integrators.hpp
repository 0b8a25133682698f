#pragma once

#include "opinf/common.hpp"

namespace opinf::fom {

/// Classical four-stage RK4 update. `rhs` is any callable (t, x) -> xdot.
template <typename Rhs>
Vec rk4_step(Rhs&& rhs, const Vec& x, double t, double dt) {
    require(dt > 0.0, "rk4_step: dt must be positive");
    const Vec k1 = rhs(t, x);
    const Vec k2 = rhs(t + 0.5 * dt, Vec(x + 0.5 * dt * k1));
    const Vec k3 = rhs(t + 0.5 * dt, Vec(x + 0.5 * dt * k2));
    const Vec k4 = rhs(t + dt, Vec(x + dt * k3));
    Vec next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite())
        throw IntegrationError("rk4_step: non-finite state after update at t=" + std::to_string(t));
    return next;
}

}  // namespace opinf::fom
