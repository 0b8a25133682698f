#pragma once

#include "opinf/common.hpp"

namespace opinf::reduction {

/// Second-order finite-difference time derivatives of column snapshots:
/// central in the interior, one-sided at the endpoints. Fallback for when the
/// solver's exact rhs snapshots are not available.
inline Mat estimate_derivatives(const Mat& states, const Vec& times) {
    require(states.cols() == times.size(), "estimate_derivatives: column/time mismatch");
    require(states.cols() >= 3, "estimate_derivatives: need at least 3 columns");
    const Index nt = times.size();
    const double dt = times[1] - times[0];
    for (Index i = 1; i < nt; ++i)
        require(std::abs((times[i] - times[i - 1]) - dt) <= 1e-12 * std::max(1.0, std::abs(dt)),
                "estimate_derivatives: time spacing must be uniform");

    Mat d(states.rows(), nt);
    d.col(0) = (-3.0 * states.col(0) + 4.0 * states.col(1) - states.col(2)) / (2.0 * dt);
    for (Index j = 1; j + 1 < nt; ++j)
        d.col(j) = (states.col(j + 1) - states.col(j - 1)) / (2.0 * dt);
    d.col(nt - 1) =
        (3.0 * states.col(nt - 1) - 4.0 * states.col(nt - 2) + states.col(nt - 3)) / (2.0 * dt);
    return d;
}

}  // namespace opinf::reduction
