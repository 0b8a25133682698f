#pragma once

#include "opinf/fom/burgers.hpp"
#include "opinf/romeval/integrate.hpp"

namespace opinf::romeval {

/// Per-time energy series of a lifted scalar-field trajectory and its
/// conservation violation E(t) - E(0).
struct EnergyDiagnostics {
    Vec energy;     // E(t_i) = dx * sum_j u_j^2
    Vec violation;  // E(t_i) - E(0)

    /// max |E(t) - E(0)| / E(0); 0 when the initial energy vanishes.
    double max_relative_drift() const {
        const double e0 = energy.size() > 0 ? energy[0] : 0.0;
        if (e0 == 0.0) return 0.0;
        return violation.cwiseAbs().maxCoeff() / e0;
    }

    /// max |E(t) - E(0)| / E(0) restricted to times[i] > t_split.
    double max_relative_drift_after(const Vec& times, double t_split) const {
        const double e0 = energy[0];
        double worst = 0.0;
        for (Index i = 0; i < times.size(); ++i)
            if (times[i] > t_split) worst = std::max(worst, std::abs(violation[i]));
        return e0 == 0.0 ? 0.0 : worst / e0;
    }
};

inline EnergyDiagnostics energy_violation(const Mat& lifted_states, const fom::Grid1D& grid) {
    EnergyDiagnostics diag;
    diag.energy.resize(lifted_states.cols());
    for (Index i = 0; i < lifted_states.cols(); ++i)
        diag.energy[i] = fom::energy(lifted_states.col(i), grid);
    diag.violation = diag.energy.array() - diag.energy[0];
    return diag;
}

/// Reduced-coordinate energy |x(t)|^2; through an orthonormal basis this
/// matches the lifted full-space energy up to the grid weight.
inline EnergyDiagnostics reduced_energy_violation(const Mat& reduced_states) {
    EnergyDiagnostics diag;
    diag.energy.resize(reduced_states.cols());
    for (Index i = 0; i < reduced_states.cols(); ++i)
        diag.energy[i] = reduced_states.col(i).squaredNorm();
    diag.violation = diag.energy.array() - diag.energy[0];
    return diag;
}

}  // namespace opinf::romeval
