#pragma once

#include <vector>

#include "opinf/poly/model.hpp"

namespace opinf::poly {

/// Full regular lattice of learned operators over the parameter box, stored
/// row-major over the axes (last axis fastest).
struct OperatorLattice {
    std::vector<std::vector<double>> axes;  // strictly increasing coordinates per axis
    std::vector<PolyOperators> ops;         // one per lattice point

    Index n_points() const {
        Index n = 1;
        for (const auto& a : axes) n *= static_cast<Index>(a.size());
        return n;
    }

    void validate() const {
        require(!axes.empty(), "OperatorLattice: no axes");
        for (const auto& a : axes) {
            require(!a.empty(), "OperatorLattice: empty axis");
            for (std::size_t i = 1; i < a.size(); ++i)
                require(a[i] > a[i - 1], "OperatorLattice: axis must be strictly increasing");
        }
        require(static_cast<Index>(ops.size()) == n_points(),
                "OperatorLattice: operator count != lattice size");
    }

    Index flat_index(const std::vector<Index>& idx) const {
        Index flat = 0;
        for (std::size_t d = 0; d < axes.size(); ++d)
            flat = flat * static_cast<Index>(axes[d].size()) + idx[d];
        return flat;
    }
};

/// Entrywise multilinear interpolation of each operator block at a query
/// inside the lattice bounding box. Queries outside the box are an error
/// (no extrapolation).
inline PolyOperators interpolate(const OperatorLattice& lattice, const Vec& mu) {
    lattice.validate();
    const std::size_t dims = lattice.axes.size();
    require(static_cast<std::size_t>(mu.size()) == dims,
            "interpolate: query dimension != lattice dimension");

    std::vector<Index> lo(dims);
    std::vector<double> weight(dims);  // weight of the upper neighbor along each axis
    for (std::size_t d = 0; d < dims; ++d) {
        const auto& axis = lattice.axes[d];
        const double q = mu[static_cast<Index>(d)];
        if (q < axis.front() || q > axis.back())
            throw DimensionError("interpolate: query outside the lattice bounding box");
        if (axis.size() == 1) {
            lo[d] = 0;
            weight[d] = 0.0;
            continue;
        }
        std::size_t cell = 0;
        while (cell + 2 < axis.size() && q >= axis[cell + 1]) ++cell;
        lo[d] = static_cast<Index>(cell);
        weight[d] = (q - axis[cell]) / (axis[cell + 1] - axis[cell]);
    }

    const auto& ref = lattice.ops.front();
    const Index k = ref.reduced_dim();
    PolyOperators out;
    out.lambda = ref.lambda;
    if (ref.c) out.c = Vec(Vec::Zero(k));
    if (ref.A) out.A = Mat(Mat::Zero(k, k));
    if (ref.H) out.H = Mat(Mat::Zero(k, sqr_size(k)));

    const std::size_t corners = std::size_t{1} << dims;
    for (std::size_t corner = 0; corner < corners; ++corner) {
        double w = 1.0;
        std::vector<Index> idx(dims);
        for (std::size_t d = 0; d < dims; ++d) {
            const bool upper = (corner >> d) & 1u;
            const bool has_upper = lattice.axes[d].size() > 1;
            if (upper && !has_upper) {
                w = 0.0;
                break;
            }
            idx[d] = lo[d] + (upper ? 1 : 0);
            w *= upper ? weight[d] : 1.0 - weight[d];
        }
        if (w == 0.0) continue;
        const auto& node = lattice.ops[static_cast<std::size_t>(lattice.flat_index(idx))];
        require(bool(node.c) == bool(ref.c) && bool(node.A) == bool(ref.A) &&
                    bool(node.H) == bool(ref.H) && node.reduced_dim() == k,
                "interpolate: lattice operators must share block structure");
        if (ref.c) *out.c += w * *node.c;
        if (ref.A) *out.A += w * *node.A;
        if (ref.H) *out.H += w * *node.H;
    }
    return out;
}

}  // namespace opinf::poly
