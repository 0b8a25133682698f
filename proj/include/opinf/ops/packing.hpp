#pragma once

#include <cmath>

#include "opinf/common.hpp"

namespace opinf::ops {

inline Index lower_size(Index k) { return k * (k + 1) / 2; }
inline Index strict_size(Index k) { return k * (k - 1) / 2; }

// Row-major packing order over the triangle, matching the sqr convention.
inline Index lower_index(Index i, Index j) { return i * (i + 1) / 2 + j; }   // j <= i
inline Index strict_index(Index i, Index j) { return i * (i - 1) / 2 + j; }  // j < i

/// Lower-triangular matrix (diagonal included) from a packed row-major vector.
inline Mat unpack_lower(const Vec& v, Index k) {
    require(v.size() == lower_size(k), "unpack_lower: length must be K(K+1)/2");
    Mat m = Mat::Zero(k, k);
    Index at = 0;
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j <= i; ++j) m(i, j) = v[at++];
    return m;
}

/// Strictly lower-triangular matrix from a packed row-major vector.
inline Mat unpack_strict(const Vec& v, Index k) {
    require(v.size() == strict_size(k), "unpack_strict: length must be K(K-1)/2");
    Mat m = Mat::Zero(k, k);
    Index at = 0;
    for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < i; ++j) m(i, j) = v[at++];
    return m;
}

inline Vec pack_lower(const Mat& m) {
    require(m.rows() == m.cols(), "pack_lower: square matrix required");
    Vec v(lower_size(m.rows()));
    Index at = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j <= i; ++j) v[at++] = m(i, j);
    return v;
}

inline Vec pack_strict(const Mat& m) {
    require(m.rows() == m.cols(), "pack_strict: square matrix required");
    Vec v(strict_size(m.rows()));
    Index at = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < i; ++j) v[at++] = m(i, j);
    return v;
}

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return x > 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// L from raw packed outputs; with `positive_diagonal` the diagonal passes
/// through softplus, making L L^T strictly positive definite.
inline Mat unpack_lower_factor(const Vec& raw, Index k, bool positive_diagonal) {
    Mat L = unpack_lower(raw, k);
    if (positive_diagonal)
        for (Index d = 0; d < k; ++d) L(d, d) = softplus(raw[lower_index(d, d)]);
    return L;
}

}  // namespace opinf::ops
