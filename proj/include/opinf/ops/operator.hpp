#pragma once

#include <Eigen/Eigenvalues>
#include <string>
#include <vector>

#include "opinf/neural/mlp.hpp"
#include "opinf/ops/packing.hpp"

namespace opinf::ops {

enum class OperatorKind { Standard, Matrix, Spsd, Skew, Vector, SpsdPotential };

inline std::string kind_name(OperatorKind k) {
    switch (k) {
        case OperatorKind::Standard: return "standard";
        case OperatorKind::Matrix: return "matrix";
        case OperatorKind::Spsd: return "spsd";
        case OperatorKind::Skew: return "skew";
        case OperatorKind::Vector: return "vector";
        case OperatorKind::SpsdPotential: return "spsd_potential";
    }
    return "?";
}

inline OperatorKind kind_from_name(const std::string& s) {
    if (s == "standard") return OperatorKind::Standard;
    if (s == "matrix") return OperatorKind::Matrix;
    if (s == "spsd") return OperatorKind::Spsd;
    if (s == "skew") return OperatorKind::Skew;
    if (s == "vector") return OperatorKind::Vector;
    if (s == "spsd_potential") return OperatorKind::SpsdPotential;
    throw DimensionError("unknown operator kind: " + s);
}

/// Required raw parameter/network output width for each kind.
inline Index output_width(OperatorKind kind, Index k) {
    switch (kind) {
        case OperatorKind::Standard: return k;
        case OperatorKind::Matrix: return k * k;
        case OperatorKind::Spsd: return lower_size(k);
        case OperatorKind::Skew: return strict_size(k);
        case OperatorKind::Vector: return k;
        case OperatorKind::SpsdPotential: return lower_size(k);
    }
    return 0;
}

enum class InputGroup { State, Params };

/// Ordered inputs eta drawn from {reduced state, parameters}.
struct InputSignature {
    std::vector<InputGroup> groups;
    Index state_dim = 0;
    Index param_dim = 0;

    static InputSignature none() { return InputSignature{}; }
    static InputSignature state(Index k) { return InputSignature{{InputGroup::State}, k, 0}; }
    static InputSignature params(Index p) { return InputSignature{{InputGroup::Params}, 0, p}; }
    static InputSignature state_params(Index k, Index p) {
        return InputSignature{{InputGroup::State, InputGroup::Params}, k, p};
    }

    Index width() const {
        Index w = 0;
        for (auto g : groups) w += g == InputGroup::State ? state_dim : param_dim;
        return w;
    }

    bool uses_state() const {
        for (auto g : groups)
            if (g == InputGroup::State) return true;
        return false;
    }

    bool uses_params() const {
        for (auto g : groups)
            if (g == InputGroup::Params) return true;
        return false;
    }

    /// Offset of the state block inside eta (-1 when absent).
    Index state_offset() const {
        Index at = 0;
        for (auto g : groups) {
            if (g == InputGroup::State) return at;
            at += param_dim;
        }
        return -1;
    }

    Vec assemble(const Vec& x, const Vec& mu) const {
        Vec eta(width());
        Index at = 0;
        for (auto g : groups) {
            if (g == InputGroup::State) {
                require(x.size() == state_dim, "InputSignature: state width mismatch");
                eta.segment(at, state_dim) = x;
                at += state_dim;
            } else {
                require(mu.size() == param_dim, "InputSignature: parameter width mismatch");
                eta.segment(at, param_dim) = mu;
                at += param_dim;
            }
        }
        return eta;
    }
};

/// One learnable operator block of the additive composition. The raw
/// parameter output comes either from a feed-forward network over eta or
/// from a constant vector (linear/constant operator parameterizations).
struct StructuredOperator {
    OperatorKind kind = OperatorKind::Standard;
    InputSignature signature;
    Index dim = 0;           // reduced dimension K
    double weight = 1.0;     // sign/scale in the composition (e.g. -1 for dissipative SPSD)
    bool positive_diagonal = false;
    bool is_network = true;
    neural::MlpParams net;   // when is_network
    Vec constant;            // when !is_network

    Index n_params() const { return is_network ? net.spec.param_count() : constant.size(); }

    void validate() const {
        require(dim >= 1, "StructuredOperator: dim must be >= 1");
        const Index w = output_width(kind, dim);
        if (is_network) {
            net.spec.validate();
            require(net.spec.n_out == w, "StructuredOperator: network output width mismatch");
            require(net.spec.n_in == signature.width(),
                    "StructuredOperator: network input width != signature width");
        } else {
            require(constant.size() == w, "StructuredOperator: constant parameter width mismatch");
        }
    }
};

/// Network-backed operator with deterministic initialization.
inline StructuredOperator make_network_operator(OperatorKind kind, InputSignature sig, Index k,
                                                Index hidden_layers, Index hidden_width,
                                                std::uint64_t seed, double weight = 1.0,
                                                bool positive_diagonal = false) {
    StructuredOperator op;
    op.kind = kind;
    op.signature = std::move(sig);
    op.dim = k;
    op.weight = weight;
    op.positive_diagonal = positive_diagonal;
    op.is_network = true;
    op.net = neural::init({op.signature.width(), hidden_layers, hidden_width, output_width(kind, k)},
                          seed);
    op.validate();
    return op;
}

/// Constant-parameterized operator (the packed raw output is learned directly).
inline StructuredOperator make_constant_operator(OperatorKind kind, Index k, const Vec& values,
                                                 double weight = 1.0,
                                                 bool positive_diagonal = false) {
    StructuredOperator op;
    op.kind = kind;
    op.signature = InputSignature::none();
    op.dim = k;
    op.weight = weight;
    op.positive_diagonal = positive_diagonal;
    op.is_network = false;
    op.constant = values;
    op.validate();
    return op;
}

/// Everything needed to evaluate an operator once and backpropagate through
/// that evaluation later.
struct OperatorEval {
    Vec x;    // normalized reduced state used
    Vec eta;  // assembled inputs (networks only)
    Vec raw;  // raw parameter output y
    neural::MlpCache cache;
    Vec out;  // unweighted contribution
    Mat L;    // Spsd / SpsdPotential factor
    Vec v;    // L^T x
};

namespace detail {

inline Vec potential_output_adjoint(const OperatorEval& ev, bool positive_diagonal) {
    // dL/dy of the scalar potential x^T L L^T x: packed 2 x v^T over the
    // lower triangle, with the softplus chain on diagonal entries.
    const Index k = ev.x.size();
    Vec q(lower_size(k));
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j <= i; ++j) {
            double g = 2.0 * ev.x[i] * ev.v[j];
            if (positive_diagonal && i == j) g *= sigmoid(ev.raw[lower_index(i, i)]);
            q[lower_index(i, j)] = g;
        }
    return q;
}

}  // namespace detail

/// Evaluates one operator in normalized coordinates, retaining intermediates.
inline OperatorEval eval_operator_cached(const StructuredOperator& op, const Vec& x, const Vec& mu) {
    op.validate();
    require(x.size() == op.dim, "eval_operator: state width mismatch");
    OperatorEval ev;
    ev.x = x;
    if (op.is_network) {
        ev.eta = op.signature.assemble(x, mu);
        ev.raw = neural::forward(op.net, ev.eta, &ev.cache);
    } else {
        ev.raw = op.constant;
    }
    if (!ev.raw.allFinite()) throw IntegrationError("eval_operator: non-finite operator output");

    switch (op.kind) {
        case OperatorKind::Standard:
        case OperatorKind::Vector:
            ev.out = ev.raw;
            break;
        case OperatorKind::Matrix: {
            // Row-major reshape of the raw output into K x K.
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                a(ev.raw.data(), op.dim, op.dim);
            ev.out = a * x;
            break;
        }
        case OperatorKind::Spsd: {
            ev.L = unpack_lower_factor(ev.raw, op.dim, op.positive_diagonal);
            ev.v = ev.L.transpose() * x;
            ev.out = ev.L * ev.v;
            break;
        }
        case OperatorKind::Skew: {
            const Mat s = unpack_strict(ev.raw, op.dim);
            ev.out = s * x - s.transpose() * x;
            break;
        }
        case OperatorKind::SpsdPotential: {
            ev.L = unpack_lower_factor(ev.raw, op.dim, op.positive_diagonal);
            ev.v = ev.L.transpose() * x;
            ev.out = 2.0 * (ev.L * ev.v);
            if (op.is_network && op.signature.uses_state()) {
                const Vec q = detail::potential_output_adjoint(ev, op.positive_diagonal);
                const Vec eta_grad = neural::grad_input(op.net, ev.cache, q);
                ev.out += eta_grad.segment(op.signature.state_offset(), op.dim);
            }
            break;
        }
    }
    return ev;
}

inline Vec eval_operator(const StructuredOperator& op, const Vec& x, const Vec& mu = Vec()) {
    return eval_operator_cached(op, x, mu).out;
}

/// Gradient of <adjoint, contribution> with respect to the operator's own
/// trainable parameters, reusing the intermediates of eval_operator_cached.
inline Vec operator_param_grad(const StructuredOperator& op, const OperatorEval& ev,
                               const Vec& adjoint) {
    const Index k = op.dim;
    auto backprop = [&](const Vec& raw_adjoint) {
        return op.is_network ? neural::grad_params(op.net, ev.cache, raw_adjoint) : raw_adjoint;
    };

    switch (op.kind) {
        case OperatorKind::Standard:
        case OperatorKind::Vector:
            return backprop(adjoint);
        case OperatorKind::Matrix: {
            Vec g(k * k);
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < k; ++j) g[i * k + j] = adjoint[i] * ev.x[j];
            return backprop(g);
        }
        case OperatorKind::Spsd: {
            const Vec u = ev.L.transpose() * adjoint;
            Vec g(lower_size(k));
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j <= i; ++j) {
                    double gij = adjoint[i] * ev.v[j] + ev.x[i] * u[j];
                    if (op.positive_diagonal && i == j) gij *= sigmoid(ev.raw[lower_index(i, i)]);
                    g[lower_index(i, j)] = gij;
                }
            return backprop(g);
        }
        case OperatorKind::Skew: {
            Vec g(strict_size(k));
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j < i; ++j)
                    g[strict_index(i, j)] = adjoint[i] * ev.x[j] - ev.x[i] * adjoint[j];
            return backprop(g);
        }
        case OperatorKind::SpsdPotential: {
            const Vec q = detail::potential_output_adjoint(ev, op.positive_diagonal);
            if (!op.is_network) {
                // Constant L: <a, 2 L L^T x>, no dL/dx term.
                const Vec u = ev.L.transpose() * adjoint;
                Vec g(lower_size(k));
                for (Index i = 0; i < k; ++i)
                    for (Index j = 0; j <= i; ++j) {
                        double gij = 2.0 * (adjoint[i] * ev.v[j] + ev.x[i] * u[j]);
                        if (op.positive_diagonal && i == j)
                            gij *= sigmoid(ev.raw[lower_index(i, i)]);
                        g[lower_index(i, j)] = gij;
                    }
                return g;
            }
            if (!op.signature.uses_state()) {
                // L = L(mu): the potential gradient is 2 L L^T x and only q
                // couples to the weights.
                return neural::grad_params(op.net, ev.cache, q);
            }
            // <a, grad_x potential> equals the x-directional derivative of the
            // potential along a, so its weight gradient is the same
            // directional derivative of dPotential/dw: a forward-over-reverse
            // sweep with the ReLU pattern frozen.
            Vec eta_dot = Vec::Zero(ev.eta.size());
            eta_dot.segment(op.signature.state_offset(), k) = adjoint;
            const neural::MlpTangent tangent = neural::forward_tangent(op.net, ev.cache, eta_dot);
            const Vec& y_dot = tangent.output;

            Mat l_dot = unpack_lower(y_dot, k);
            if (op.positive_diagonal)
                for (Index d = 0; d < k; ++d)
                    l_dot(d, d) = sigmoid(ev.raw[lower_index(d, d)]) * y_dot[lower_index(d, d)];
            const Vec v_dot = l_dot.transpose() * ev.x + ev.L.transpose() * adjoint;

            Vec q_dot(lower_size(k));
            for (Index i = 0; i < k; ++i)
                for (Index j = 0; j <= i; ++j) {
                    double qd = 2.0 * (adjoint[i] * ev.v[j] + ev.x[i] * v_dot[j]);
                    if (op.positive_diagonal && i == j) {
                        const double s = sigmoid(ev.raw[lower_index(i, i)]);
                        qd = qd * s +
                             2.0 * ev.x[i] * ev.v[i] * s * (1.0 - s) * y_dot[lower_index(i, i)];
                    }
                    q_dot[lower_index(i, j)] = qd;
                }
            return neural::grad_params_tangent(op.net, ev.cache, tangent, q, q_dot);
        }
    }
    throw DimensionError("operator_param_grad: unknown kind");
}

inline Vec get_operator_params(const StructuredOperator& op) {
    return op.is_network ? op.net.flatten() : op.constant;
}

inline void set_operator_params(StructuredOperator& op, const Vec& values) {
    if (op.is_network)
        op.net.unflatten(values);
    else {
        require(values.size() == op.constant.size(), "set_operator_params: length mismatch");
        op.constant = values;
    }
}

/// Numeric verification of the structure an operator claims, over samples.
struct StructureReport {
    std::string claim;            // "skew", "spsd", or "no structure claimed"
    double max_asymmetry = 0.0;   // skew: max |A + A^T| over samples
    double max_quadform = 0.0;    // skew: max |x^T A x| (scaled by |x||Ax|)
    double min_eigenvalue = 0.0;  // spsd: min eigenvalue of L L^T
    double min_quadform = 0.0;    // spsd: min x^T L L^T x
};

inline StructureReport structure_report(const StructuredOperator& op, const Mat& states,
                                        const Mat& params = Mat()) {
    require(states.cols() > 0, "structure_report: no samples");
    StructureReport rep;
    const bool skew = op.kind == OperatorKind::Skew;
    const bool spsd = op.kind == OperatorKind::Spsd || op.kind == OperatorKind::SpsdPotential;
    if (!skew && !spsd) {
        rep.claim = "no structure claimed";
        return rep;
    }
    rep.claim = skew ? "skew" : "spsd";
    rep.min_eigenvalue = std::numeric_limits<double>::infinity();
    rep.min_quadform = std::numeric_limits<double>::infinity();
    for (Index s = 0; s < states.cols(); ++s) {
        const Vec x = states.col(s);
        const Vec mu = params.size() > 0 ? Vec(params.col(s)) : Vec();
        const OperatorEval ev = eval_operator_cached(op, x, mu);
        if (skew) {
            const Mat sm = unpack_strict(ev.raw, op.dim);
            const Mat a = sm - sm.transpose();
            rep.max_asymmetry = std::max(rep.max_asymmetry, (a + a.transpose()).norm());
            rep.max_quadform = std::max(rep.max_quadform, std::abs(x.dot(ev.out)));
        } else {
            const Mat gram = ev.L * ev.L.transpose();
            Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
            rep.min_eigenvalue = std::min(rep.min_eigenvalue, eig.eigenvalues().minCoeff());
            rep.min_quadform = std::min(rep.min_quadform, x.dot(gram * x));
        }
    }
    return rep;
}

}  // namespace opinf::ops
