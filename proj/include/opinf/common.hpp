#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace opinf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dimension/consistency violations in operation inputs.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Nonlinear/iterative solver failed to converge.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values produced during time integration.
class IntegrationError : public std::runtime_error {
public:
    explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw DimensionError(what);
}

/// Pairwise tree sum over [begin, end); the reduction order is fixed by the
/// index range alone, so results do not depend on how work is partitioned.
template <typename F>
double pairwise_sum(Index begin, Index end, F&& term) {
    const Index n = end - begin;
    if (n <= 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (Index i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const Index mid = begin + n / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

inline double relative_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace opinf
