#pragma once

#include <vector>

#include "opinf/ops/model.hpp"

namespace opinf::train {

struct LossResult {
    double value = 0.0;
    Vec grad;
};

namespace detail {

struct SampleTerm {
    double residual_sq;
    Vec grad;  // gradient of |residual|^2 wrt model parameters
};

template <typename F>
SampleTerm pairwise_terms(Index lo, Index hi, F&& term) {
    if (hi - lo == 1) return term(lo);
    const Index mid = lo + (hi - lo) / 2;
    SampleTerm a = pairwise_terms(lo, mid, term);
    const SampleTerm b = pairwise_terms(mid, hi, term);
    a.residual_sq += b.residual_sq;
    a.grad += b.grad;
    return a;
}

}  // namespace detail

/// Relative mean-square loss over a batch with an explicit l2 penalty:
///   sum_b |f(x_b, mu_b) - y_b|^2 / sum_b |y_b|^2 + weight_decay |w|^2,
/// in normalized coordinates, with the reverse-mode parameter gradient.
/// Sums reduce pairwise so results do not depend on work partitioning. An
/// all-zero target batch uses denominator 1.
inline LossResult loss(const ops::RomModel& model, const reduction::ReducedDataset& ds,
                       const std::vector<Index>& batch, double weight_decay) {
    require(!batch.empty(), "loss: empty batch");
    const Index n = static_cast<Index>(batch.size());

    double denom = pairwise_sum(0, n, [&](Index b) { return ds.velocities.col(batch[static_cast<std::size_t>(b)]).squaredNorm(); });
    if (denom == 0.0) denom = 1.0;

    auto term = [&](Index b) {
        const Index col = batch[static_cast<std::size_t>(b)];
        const Vec x = ds.states.col(col);
        const Vec mu = ds.params.size() > 0 ? Vec(ds.params.col(col)) : Vec();

        std::vector<ops::OperatorEval> evals;
        evals.reserve(model.operators.size());
        Vec predicted = Vec::Zero(model.dim);
        for (const auto& op : model.operators) {
            evals.push_back(ops::eval_operator_cached(op, x, mu));
            predicted += op.weight * evals.back().out;
        }
        const Vec residual = predicted - ds.velocities.col(col);

        detail::SampleTerm t;
        t.residual_sq = residual.squaredNorm();
        t.grad.resize(model.n_params());
        Index at = 0;
        for (std::size_t r = 0; r < model.operators.size(); ++r) {
            const auto& op = model.operators[r];
            const Vec adjoint = 2.0 * op.weight * residual;
            t.grad.segment(at, op.n_params()) = ops::operator_param_grad(op, evals[r], adjoint);
            at += op.n_params();
        }
        return t;
    };

    detail::SampleTerm total = detail::pairwise_terms(0, n, term);
    LossResult out;
    const Vec w = model.get_params();
    out.value = total.residual_sq / denom + weight_decay * w.squaredNorm();
    out.grad = total.grad / denom + 2.0 * weight_decay * w;
    return out;
}

/// Loss value only (skips the gradient work).
inline double loss_value(const ops::RomModel& model, const reduction::ReducedDataset& ds,
                         const std::vector<Index>& batch, double weight_decay) {
    require(!batch.empty(), "loss_value: empty batch");
    const Index n = static_cast<Index>(batch.size());
    double denom = pairwise_sum(0, n, [&](Index b) { return ds.velocities.col(batch[static_cast<std::size_t>(b)]).squaredNorm(); });
    if (denom == 0.0) denom = 1.0;
    const double num = pairwise_sum(0, n, [&](Index b) {
        const Index col = batch[static_cast<std::size_t>(b)];
        const Vec mu = ds.params.size() > 0 ? Vec(ds.params.col(col)) : Vec();
        return (eval_model_normalized(model, ds.states.col(col), mu) - ds.velocities.col(col))
            .squaredNorm();
    });
    return num / denom + weight_decay * model.get_params().squaredNorm();
}

}  // namespace opinf::train
