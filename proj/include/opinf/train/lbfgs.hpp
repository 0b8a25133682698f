#pragma once

#include <deque>
#include <functional>

#include "opinf/common.hpp"

namespace opinf::train {

/// Objective callable: params -> loss, with the gradient written to `grad`.
using Objective = std::function<double(const Vec&, Vec&)>;

struct LbfgsOptions {
    Index max_iters = 50;
    Index history = 10;       // curvature-pair memory m
    double c1 = 1e-4;         // sufficient-decrease constant
    double c2 = 0.9;          // curvature constant
    double grad_tol = 1e-12;  // relative gradient stopping tolerance
    Index max_line_search = 30;
};

struct LbfgsReport {
    Index iterations = 0;
    bool line_search_failed = false;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    double grad_norm = 0.0;
};

/// Curvature-pair history; pairs with s.y <= 1e-10 |s||y| are rejected.
struct LbfgsState {
    std::deque<std::pair<Vec, Vec>> pairs;  // (s, y)
    Index max_pairs = 10;
    Index iteration = 0;

    void push(const Vec& s, const Vec& y) {
        if (s.dot(y) <= 1e-10 * s.norm() * y.norm()) return;
        pairs.emplace_back(s, y);
        while (static_cast<Index>(pairs.size()) > max_pairs) pairs.pop_front();
    }

    /// Two-loop recursion: returns the descent direction -H g.
    Vec direction(const Vec& grad) const {
        Vec q = grad;
        std::vector<double> alpha(pairs.size());
        for (std::size_t i = pairs.size(); i > 0; --i) {
            const auto& [s, y] = pairs[i - 1];
            alpha[i - 1] = s.dot(q) / s.dot(y);
            q -= alpha[i - 1] * y;
        }
        if (!pairs.empty()) {
            const auto& [s, y] = pairs.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& [s, y] = pairs[i];
            const double beta = y.dot(q) / s.dot(y);
            q += (alpha[i] - beta) * s;
        }
        return -q;
    }
};

namespace detail {

struct LinePoint {
    double alpha;
    double value;
    double slope;
};

/// Strong Wolfe line search (bracket then zoom, bisection refinement).
/// Returns alpha > 0 on success, 0 on failure.
template <typename Phi>
double strong_wolfe(Phi&& phi, double f0, double slope0, const LbfgsOptions& opt) {
    if (slope0 >= 0.0) return 0.0;  // not a descent direction

    auto zoom = [&](LinePoint lo, LinePoint hi) {
        for (Index i = 0; i < opt.max_line_search; ++i) {
            const double a = 0.5 * (lo.alpha + hi.alpha);
            LinePoint p{a, 0.0, 0.0};
            std::tie(p.value, p.slope) = phi(a);
            if (!std::isfinite(p.value) || p.value > f0 + opt.c1 * a * slope0 ||
                p.value >= lo.value) {
                hi = p;
            } else {
                if (std::abs(p.slope) <= -opt.c2 * slope0) return a;
                if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = p;
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-16) break;
        }
        return 0.0;
    };

    LinePoint prev{0.0, f0, slope0};
    double alpha = 1.0;
    for (Index i = 0; i < opt.max_line_search; ++i) {
        LinePoint p{alpha, 0.0, 0.0};
        std::tie(p.value, p.slope) = phi(alpha);
        if (!std::isfinite(p.value) || p.value > f0 + opt.c1 * alpha * slope0 ||
            (i > 0 && p.value >= prev.value))
            return zoom(prev, p);
        if (std::abs(p.slope) <= -opt.c2 * slope0) return alpha;
        if (p.slope >= 0.0) return zoom(p, prev);
        prev = p;
        alpha *= 2.0;
        if (alpha > 1e10) break;
    }
    return 0.0;
}

}  // namespace detail

/// Quasi-Newton run on a full-batch objective: two-loop-recursion directions
/// with a strong Wolfe line search; loss is non-increasing over accepted
/// steps. Line-search failure returns the best parameters found so far.
inline LbfgsReport lbfgs_run(Vec& params, const Objective& objective, const LbfgsOptions& opt = {}) {
    LbfgsReport report;
    LbfgsState state;
    state.max_pairs = opt.history;

    Vec grad(params.size());
    double f = objective(params, grad);
    report.initial_loss = f;
    report.final_loss = f;
    if (!std::isfinite(f) || !grad.allFinite()) {
        report.line_search_failed = true;
        return report;
    }
    Vec best_params = params;
    double best_f = f;

    for (Index it = 0; it < opt.max_iters; ++it) {
        report.grad_norm = grad.norm();
        if (report.grad_norm <= opt.grad_tol * std::max(1.0, params.norm())) break;

        const Vec dir = state.direction(grad);
        const double slope0 = grad.dot(dir);
        Vec trial_grad(params.size());
        auto phi = [&](double a) {
            const double value = objective(Vec(params + a * dir), trial_grad);
            return std::make_pair(value, trial_grad.dot(dir));
        };
        const double alpha = detail::strong_wolfe(phi, f, slope0, opt);
        if (alpha <= 0.0) {
            report.line_search_failed = true;
            break;
        }
        // trial_grad holds the gradient at the accepted point (last phi call
        // in the search evaluated exactly alpha).
        const double f_new = objective(Vec(params + alpha * dir), trial_grad);
        const Vec step = alpha * dir;
        state.push(step, Vec(trial_grad - grad));
        params += step;
        f = f_new;
        grad = trial_grad;
        report.iterations = it + 1;
        if (f < best_f) {
            best_f = f;
            best_params = params;
        }
    }

    if (f > best_f) {
        params = best_params;
        f = best_f;
    }
    report.final_loss = f;
    return report;
}

}  // namespace opinf::train
