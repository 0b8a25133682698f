#pragma once

#include <limits>
#include <sstream>
#include <vector>

#include "opinf/poly/fit.hpp"
#include "opinf/romeval/integrate.hpp"

namespace opinf::poly {

/// 40 lambdas log-spaced on [1e-8, 1e3], with the trajectory relative error
/// over the training data as the selection metric.
struct RegSearchSpec {
    std::vector<double> lambdas;

    static RegSearchSpec standard() {
        RegSearchSpec spec;
        const int n = 40;
        for (int i = 0; i < n; ++i)
            spec.lambdas.push_back(std::pow(10.0, -8.0 + 11.0 * i / (n - 1)));
        return spec;
    }

    void validate() const {
        require(!lambdas.empty(), "RegSearchSpec: empty grid");
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            require(lambdas[i] > 0.0, "RegSearchSpec: lambdas must be positive");
            if (i > 0) require(lambdas[i] > lambdas[i - 1], "RegSearchSpec: lambdas must increase");
        }
    }
};

/// One training trajectory the candidate models must reproduce.
struct FitTrajectory {
    Mat states;      // K x N_t reduced training states (also the scoring reference)
    Mat velocities;  // K x N_t reduced velocity targets
    Vec times;       // uniform

    Vec initial_state() const { return states.col(0); }
};

struct GridSearchResult {
    PolyOperators ops;             // refit at best lambda in the single-trajectory case
    double lambda = 0.0;
    double error = 0.0;
    std::vector<double> errors;    // per-lambda score (inf marks unstable candidates)
};

/// Fits one model per lambda on the pooled data, integrates each over every
/// training trajectory, and keeps the model with the smallest aggregate
/// relative error. Divergent candidates score infinity; ties keep the
/// smallest lambda.
inline GridSearchResult grid_search_multi(const std::vector<FitTrajectory>& trajectories,
                                          const RegSearchSpec& spec, const Blocks& blocks,
                                          std::vector<PolyOperators>* per_trajectory_best = nullptr) {
    spec.validate();
    require(!trajectories.empty(), "grid_search: no trajectories");

    const double inf = std::numeric_limits<double>::infinity();
    GridSearchResult best;
    best.error = inf;
    std::vector<PolyOperators> best_fits;

    for (double lambda : spec.lambdas) {
        // Interpolatory parametric P-OpInf fits one operator set per
        // trajectory (parameter realization) with a shared lambda.
        std::vector<PolyOperators> fits;
        double num = 0.0, denom = 0.0;
        bool unstable = false;
        for (const auto& traj : trajectories) {
            fits.push_back(fit(traj.states, traj.velocities, blocks, lambda));
            const auto& ops = fits.back();
            auto run = romeval::integrate_rom([&](const Vec& x) { return eval_poly_rhs(ops, x); },
                                              traj.initial_state(), traj.times);
            if (!run.stable) {
                unstable = true;
                break;
            }
            num += pairwise_sum(0, traj.states.cols(), [&](Index i) {
                return (run.trajectory.col(i) - traj.states.col(i)).norm();
            });
            denom += pairwise_sum(0, traj.states.cols(),
                                  [&](Index i) { return traj.states.col(i).norm(); });
        }
        const double score = unstable ? inf : (denom > 0.0 ? num / denom : num);
        best.errors.push_back(score);
        if (score < best.error) {
            best.error = score;
            best.lambda = lambda;
            best_fits = std::move(fits);
        }
    }

    if (!std::isfinite(best.error)) {
        std::ostringstream msg;
        msg << "grid_search: every candidate was unstable; per-lambda scores:";
        for (std::size_t i = 0; i < spec.lambdas.size(); ++i)
            msg << " (" << spec.lambdas[i] << ", " << best.errors[i] << ")";
        throw SolverError(msg.str());
    }
    best.ops = best_fits.front();
    if (per_trajectory_best) *per_trajectory_best = std::move(best_fits);
    return best;
}

/// Single-trajectory regularization search (the common non-parametric case).
inline GridSearchResult grid_search(const Mat& states, const Mat& velocities, const Vec& times,
                                    const RegSearchSpec& spec, const Blocks& blocks) {
    return grid_search_multi({FitTrajectory{states, velocities, times}}, spec, blocks);
}

}  // namespace opinf::poly
