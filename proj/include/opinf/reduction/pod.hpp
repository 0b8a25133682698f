#pragma once

#include <Eigen/SVD>
#include <string>
#include <vector>

#include "opinf/io.hpp"

namespace opinf::reduction {

/// Global snapshot matrix: per-parameter blocks concatenated column-wise.
struct SnapshotMatrix {
    Mat data;                          // N x (sum of block sizes)
    std::vector<Index> block_offsets;  // start column of each block, then total

    static SnapshotMatrix from_blocks(const std::vector<Mat>& blocks) {
        require(!blocks.empty(), "SnapshotMatrix: no blocks");
        SnapshotMatrix out;
        Index cols = 0;
        out.block_offsets.push_back(0);
        for (const Mat& b : blocks) {
            require(b.rows() == blocks.front().rows(), "SnapshotMatrix: row counts disagree");
            cols += b.cols();
            out.block_offsets.push_back(cols);
        }
        out.data.resize(blocks.front().rows(), cols);
        Index at = 0;
        for (const Mat& b : blocks) {
            out.data.middleCols(at, b.cols()) = b;
            at += b.cols();
        }
        return out;
    }

    static SnapshotMatrix from_matrix(const Mat& m) { return from_blocks({m}); }
};

/// Orthonormal reduction map with the full singular spectrum retained for
/// projection-error reporting.
struct PodBasis {
    Mat V;                // N x K, orthonormal columns
    Vec singular_values;  // full spectrum, non-increasing

    Index full_dim() const { return V.rows(); }
    Index reduced_dim() const { return V.cols(); }

    /// Leading-K sub-basis (POD bases are nested).
    PodBasis truncated(Index k) const {
        require(k >= 1 && k <= reduced_dim(), "PodBasis::truncated: K out of range");
        return PodBasis{V.leftCols(k), singular_values};
    }

    /// Squared projection error of the training data: sum of sigma_i^2, i > K.
    double tail_energy(Index k) const {
        double s = 0.0;
        for (Index i = k; i < singular_values.size(); ++i)
            s += singular_values[i] * singular_values[i];
        return s;
    }
};

/// POD via the SVD of the (dense) snapshot matrix; V holds the first K left
/// singular vectors.
inline PodBasis compute_pod(const SnapshotMatrix& snapshots, Index k) {
    const Mat& X = snapshots.data;
    require(k >= 1 && k <= std::min(X.rows(), X.cols()), "compute_pod: K out of range");
    Eigen::BDCSVD<Mat> svd(X, Eigen::ComputeThinU);
    PodBasis basis;
    basis.V = svd.matrixU().leftCols(k);
    basis.singular_values = svd.singularValues();
    return basis;
}

/// Reduced coordinates V^T X.
inline Mat project(const PodBasis& basis, const Mat& X) {
    require(X.rows() == basis.full_dim(), "project: row count != basis dimension");
    return basis.V.transpose() * X;
}

/// Lift reduced coordinates back to the full space.
inline Mat lift(const PodBasis& basis, const Mat& reduced) {
    require(reduced.rows() == basis.reduced_dim(), "lift: row count != basis rank");
    return basis.V * reduced;
}

// --- serialization ---------------------------------------------------------
// "OIFPOD1\0", u64 N, u64 K, u64 spectrum length, V column-major, spectrum.

inline void save_pod(const PodBasis& basis, const std::string& path) {
    auto os = io::open_out(path);
    io::write_magic(os, "OIFPOD1\0");
    io::write_u64(os, static_cast<std::uint64_t>(basis.full_dim()));
    io::write_u64(os, static_cast<std::uint64_t>(basis.reduced_dim()));
    io::write_u64(os, static_cast<std::uint64_t>(basis.singular_values.size()));
    io::write_mat(os, basis.V);
    io::write_f64(os, basis.singular_values.data(),
                  static_cast<std::size_t>(basis.singular_values.size()));
    if (!os) throw io::FileError("failed writing POD basis to " + path);
}

inline PodBasis load_pod(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "OIFPOD1\0", path);
    const auto n = static_cast<Index>(io::read_u64(is));
    const auto k = static_cast<Index>(io::read_u64(is));
    const auto ns = static_cast<Index>(io::read_u64(is));
    PodBasis basis;
    basis.V.resize(n, k);
    basis.singular_values.resize(ns);
    io::read_mat(is, basis.V);
    io::read_f64(is, basis.singular_values.data(), static_cast<std::size_t>(ns));
    return basis;
}

}  // namespace opinf::reduction
