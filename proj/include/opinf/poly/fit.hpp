#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include "opinf/poly/model.hpp"

namespace opinf::poly {

/// Which polynomial blocks to infer.
struct Blocks {
    bool constant = false;
    bool linear = false;
    bool quadratic = false;

    static Blocks a() { return {false, true, false}; }
    static Blocks ah() { return {false, true, true}; }
    static Blocks ca() { return {true, true, false}; }
    static Blocks cah() { return {true, true, true}; }

    Index width(Index k) const {
        return (constant ? 1 : 0) + (linear ? k : 0) + (quadratic ? sqr_size(k) : 0);
    }
};

struct FitDiagnostics {
    bool rank_deficient = false;
    Index rank = 0;
    Index columns = 0;
};

namespace detail {

/// Design matrix with rows [1 | x^T | sqr(x)^T] for the requested blocks.
inline Mat design_matrix(const Mat& states, const Blocks& blocks) {
    const Index k = states.rows();
    const Index n = states.cols();
    Mat d(n, blocks.width(k));
    for (Index j = 0; j < n; ++j) {
        Index at = 0;
        if (blocks.constant) d(j, at++) = 1.0;
        if (blocks.linear) {
            d.row(j).segment(at, k) = states.col(j).transpose();
            at += k;
        }
        if (blocks.quadratic) d.row(j).segment(at, sqr_size(k)) = sqr_pack(states.col(j)).transpose();
    }
    return d;
}

inline PolyOperators unstack(const Mat& theta, Index k, const Blocks& blocks, double lambda) {
    // theta is p x K: one column of coefficients per output component.
    PolyOperators ops;
    ops.lambda = lambda;
    Index at = 0;
    if (blocks.constant) {
        ops.c = Vec(theta.row(at).transpose());
        at += 1;
    }
    if (blocks.linear) {
        ops.A = Mat(theta.middleRows(at, k).transpose());
        at += k;
    }
    if (blocks.quadratic) ops.H = Mat(theta.middleRows(at, sqr_size(k)).transpose());
    return ops;
}

}  // namespace detail

/// Tikhonov least-squares inference of the requested blocks:
///   min over theta of sum_j |D_j theta - y_j|^2 + lambda |theta|^2,
/// solved per output row through a complete orthogonal decomposition of the
/// augmented system [D; sqrt(lambda) I]. With lambda = 0 and a rank-deficient
/// design this yields the minimum-norm solution and sets the diagnostics flag.
inline PolyOperators fit(const Mat& states, const Mat& velocities, const Blocks& blocks,
                         double lambda, FitDiagnostics* diag = nullptr) {
    require(states.cols() == velocities.cols() && states.cols() >= 1,
            "fit: need matching, non-empty sample sets");
    require(states.rows() == velocities.rows(), "fit: state/velocity dimension mismatch");
    require(lambda >= 0.0, "fit: lambda must be non-negative");
    require(blocks.constant || blocks.linear || blocks.quadratic, "fit: no blocks requested");

    const Index k = states.rows();
    const Index n = states.cols();
    const Index p = blocks.width(k);
    const Mat d = detail::design_matrix(states, blocks);

    Mat augmented;
    Mat targets;
    if (lambda > 0.0) {
        augmented.setZero(n + p, p);
        augmented.topRows(n) = d;
        augmented.bottomRows(p).diagonal().setConstant(std::sqrt(lambda));
        targets.setZero(n + p, k);
        targets.topRows(n) = velocities.transpose();
    } else {
        augmented = d;
        targets = velocities.transpose();
    }

    Eigen::CompleteOrthogonalDecomposition<Mat> cod(augmented);
    const Mat theta = cod.solve(targets);
    if (diag) {
        diag->rank = cod.rank();
        diag->columns = p;
        diag->rank_deficient = cod.rank() < p;
    }
    return detail::unstack(theta, k, blocks, lambda);
}

/// Independent route for the linear-only, lambda = 0 problem: solves the
/// vectorized formulation |(X^T kron I) vec(A) - y|^2 assembled explicitly
/// and factored by SVD. Test oracle for fit; not used by the pipeline.
inline Mat fit_vec_oracle(const Mat& states, const Mat& velocities) {
    require(states.cols() == velocities.cols() && states.cols() >= 1,
            "fit_vec_oracle: need matching, non-empty sample sets");
    const Index k = states.rows();
    const Index n = states.cols();
    Mat kron = Mat::Zero(n * k, k * k);
    Vec y(n * k);
    for (Index j = 0; j < n; ++j) {
        for (Index col = 0; col < k; ++col)
            for (Index row = 0; row < k; ++row)
                kron(j * k + row, col * k + row) = states(col, j);
        y.segment(j * k, k) = velocities.col(j);
    }
    Eigen::BDCSVD<Mat> svd(kron, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec vec_a = svd.solve(y);
    Mat a(k, k);
    std::copy(vec_a.data(), vec_a.data() + k * k, a.data());  // vec() is column-major
    return a;
}

}  // namespace opinf::poly
