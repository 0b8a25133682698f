#pragma once

#include <algorithm>
#include <vector>

#include "opinf/rng.hpp"

namespace opinf::reduction {

/// Max-abs scale factor over a training block; an all-zero block scales by 1
/// so normalization stays invertible.
inline double maxabs_fit(const Mat& data) {
    require(data.size() > 0, "maxabs_fit: empty data");
    const double m = data.cwiseAbs().maxCoeff();
    return m > 0.0 ? m : 1.0;
}

/// Deterministic 80/20 split of sample indices.
struct SplitIndices {
    std::vector<Index> train;
    std::vector<Index> validation;
    std::uint64_t seed = 0;
};

inline SplitIndices split(Index n, std::uint64_t seed) {
    require(n >= 2, "split: need at least 2 samples");
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(mix64(seed, 0x73706c6974ULL));  // "split"
    rng.shuffle(idx);
    const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * 0.8);
    SplitIndices s;
    s.seed = seed;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.validation.begin(), s.validation.end());
    return s;
}

/// One scalar per variable group; scaling by a scalar commutes with the
/// algebraic structure imposed on operators.
struct Scales {
    double state = 1.0;
    double velocity = 1.0;
    double params = 1.0;
};

/// Normalized reduced states, velocities, and parameters ready for inference,
/// with the max-abs scale factors (fit on the training split only).
struct ReducedDataset {
    Mat states;      // K x n, normalized
    Mat velocities;  // K x n, normalized
    Mat params;      // n_params x n, normalized (0 rows when non-parametric)
    Scales scales;

    Index n_samples() const { return states.cols(); }
    Index reduced_dim() const { return states.rows(); }
    Index param_dim() const { return params.rows(); }

    void validate() const {
        require(velocities.cols() == states.cols() &&
                    (params.size() == 0 || params.cols() == states.cols()),
                "ReducedDataset: sample counts disagree");
        require(scales.state > 0 && scales.velocity > 0 && scales.params > 0,
                "ReducedDataset: scales must be positive");
    }
};

namespace detail {
inline Mat gather_cols(const Mat& m, const std::vector<Index>& idx) {
    Mat out(m.rows(), static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Index>(j)) = m.col(idx[j]);
    return out;
}
}  // namespace detail

/// Builds the normalized dataset from raw projected data. Scale factors come
/// from the training portion of the split.
inline ReducedDataset make_reduced_dataset(const Mat& states_raw, const Mat& velocities_raw,
                                           const Mat& params_raw, const SplitIndices& split) {
    require(states_raw.cols() == velocities_raw.cols(), "make_reduced_dataset: column mismatch");
    ReducedDataset ds;
    ds.scales.state = maxabs_fit(detail::gather_cols(states_raw, split.train));
    ds.scales.velocity = maxabs_fit(detail::gather_cols(velocities_raw, split.train));
    ds.scales.params =
        params_raw.size() > 0 ? maxabs_fit(detail::gather_cols(params_raw, split.train)) : 1.0;
    ds.states = states_raw / ds.scales.state;
    ds.velocities = velocities_raw / ds.scales.velocity;
    ds.params = params_raw.size() > 0 ? Mat(params_raw / ds.scales.params) : params_raw;
    ds.validate();
    return ds;
}

}  // namespace opinf::reduction
