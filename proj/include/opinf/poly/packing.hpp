#pragma once

#include "opinf/common.hpp"

namespace opinf::poly {

inline Index sqr_size(Index k) { return k * (k + 1) / 2; }

/// The K(K+1)/2 unique entries of the symmetric Kronecker square, row by row
/// over the lower triangle: [x1x1, x2x1, x2x2, x3x1, x3x2, x3x3, ...].
inline Vec sqr_pack(const Vec& x) {
    const Index k = x.size();
    Vec out(sqr_size(k));
    Index at = 0;
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j <= i; ++j) out[at++] = x[i] * x[j];
    return out;
}

/// Encodes a full symmetric quadratic-form matrix Q into a packed row, so
/// that row . sqr_pack(x) == x^T Q x.
inline Vec sqr_encode_symmetric(const Mat& q) {
    require(q.rows() == q.cols(), "sqr_encode_symmetric: Q must be square");
    const Index k = q.rows();
    Vec out(sqr_size(k));
    Index at = 0;
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j <= i; ++j) out[at++] = (i == j) ? q(i, i) : q(i, j) + q(j, i);
    return out;
}

}  // namespace opinf::poly
