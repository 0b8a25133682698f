#pragma once

#include "opinf/reduction/pod.hpp"

namespace opinf::romeval {

/// Intrusive Galerkin baseline: dx = V^T f(V x). `fom_rhs` is any callable
/// on full-order states.
template <typename FomRhs>
Vec galerkin_rhs(const reduction::PodBasis& basis, FomRhs&& fom_rhs, const Vec& x_reduced) {
    require(x_reduced.size() == basis.reduced_dim(), "galerkin_rhs: reduced dimension mismatch");
    const Vec lifted = basis.V * x_reduced;
    return basis.V.transpose() * fom_rhs(lifted);
}

}  // namespace opinf::romeval
