#pragma once

#include "opinf/common.hpp"

namespace opinf::train {

/// Bias-corrected first/second moment state for ADAM.
struct AdamState {
    Vec m;
    Vec v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Index n) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

/// One ADAM update in place. A non-finite gradient rejects the step (state
/// untouched) and returns false so callers can diagnose.
inline bool adam_step(AdamState& state, Vec& params, const Vec& grad, double lr) {
    require(params.size() == state.m.size() && grad.size() == state.m.size(),
            "adam_step: shape mismatch");
    if (!grad.allFinite()) return false;
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    const Vec denom = ((state.v / c2).cwiseSqrt().array() + state.eps).matrix();
    params -= (lr / c1) * state.m.cwiseQuotient(denom);
    return true;
}

}  // namespace opinf::train
