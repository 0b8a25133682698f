#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "opinf/io.hpp"

namespace opinf::cost {

/// Inputs to the analytical FLOP formulas.
struct CostQuery {
    Index K = 1;
    Index n_h = 3;     // hidden layers
    Index n_n = 1;     // hidden width
    Index n_in = 1;
    Index n_out = 1;
    Index n_oa = 1;    // activation op count
    Index n_snapshots = 1;  // N_s = N_t * N_train
    Index n_epochs = 1;

    void validate() const {
        require(K >= 1 && n_h >= 1 && n_n >= 1 && n_in >= 1 && n_out >= 1 && n_oa >= 1 &&
                    n_snapshots >= 1 && n_epochs >= 1,
                "CostQuery: all fields must be positive");
    }
};

enum class EvalKind {
    Linear,
    Quadratic,
    SpsdApply,
    SkewApply,
    NnForward,
    NnOpinfStandard,
    NnOpinfMatrix,
    NnOpinfSpsd,
    NnOpinfSkew,
    SpsdPotential,
};

inline std::string eval_kind_name(EvalKind k) {
    switch (k) {
        case EvalKind::Linear: return "linear";
        case EvalKind::Quadratic: return "quadratic";
        case EvalKind::SpsdApply: return "spsd_apply";
        case EvalKind::SkewApply: return "skew_apply";
        case EvalKind::NnForward: return "nn_forward";
        case EvalKind::NnOpinfStandard: return "nn_opinf_standard";
        case EvalKind::NnOpinfMatrix: return "nn_opinf_matrix";
        case EvalKind::NnOpinfSpsd: return "nn_opinf_spsd";
        case EvalKind::NnOpinfSkew: return "nn_opinf_skew";
        case EvalKind::SpsdPotential: return "spsd_potential";
    }
    return "?";
}

/// Network output width per operator kind.
inline double eval_nout(EvalKind kind, Index k) {
    const double kd = static_cast<double>(k);
    switch (kind) {
        case EvalKind::NnOpinfStandard: return kd;
        case EvalKind::NnOpinfMatrix: return kd * kd;
        case EvalKind::NnOpinfSpsd:
        case EvalKind::SpsdPotential: return kd * (kd + 1.0) / 2.0;
        case EvalKind::NnOpinfSkew: return kd * (kd - 1.0) / 2.0;
        default: throw DimensionError("eval_nout: not a network operator kind");
    }
}

/// Forward-pass FLOPs of the dense network:
///   2 n_n n_in + n_oa n_n + n_h (2 n_n^2 + n_oa n_n) + 2 n_n n_out.
inline double nn_forward_cost(double n_in, double n_h, double n_n, double n_out, double n_oa) {
    return 2.0 * n_n * n_in + n_oa * n_n + n_h * (2.0 * n_n * n_n + n_oa * n_n) +
           2.0 * n_n * n_out;
}

/// Dominant per-evaluation FLOP count for each operator family. Operator
/// application adds 2K^2 for the matrix kind and K^2 for the triangular
/// kinds; the potential's O(K^2) residual is taken as exactly K^2.
inline double eval_cost(EvalKind kind, const CostQuery& q) {
    q.validate();
    const double k = static_cast<double>(q.K);
    auto nn = [&](double n_out) {
        return nn_forward_cost(static_cast<double>(q.n_in), static_cast<double>(q.n_h),
                               static_cast<double>(q.n_n), n_out, static_cast<double>(q.n_oa));
    };
    switch (kind) {
        case EvalKind::Linear: return 2.0 * k * k;
        case EvalKind::Quadratic: return k * k * k + 1.5 * k * k;
        case EvalKind::SpsdApply:
        case EvalKind::SkewApply: return k * k;
        case EvalKind::NnForward: return nn(static_cast<double>(q.n_out));
        case EvalKind::NnOpinfStandard: return nn(eval_nout(kind, q.K));
        case EvalKind::NnOpinfMatrix: return nn(eval_nout(kind, q.K)) + 2.0 * k * k;
        case EvalKind::NnOpinfSpsd:
        case EvalKind::NnOpinfSkew: return nn(eval_nout(kind, q.K)) + k * k;
        case EvalKind::SpsdPotential:
            return 3.0 * nn(eval_nout(EvalKind::NnOpinfSpsd, q.K)) + k * k;
    }
    throw DimensionError("eval_cost: unknown kind");
}

enum class TrainKind {
    PopinfLinear,
    PopinfQuadratic,
    NnOpinfStandard,
    NnOpinfMatrix,
    NnOpinfSpsd,
    NnOpinfSkew,
    SpsdPotential,
};

/// Training cost: P-OpInf as K (N_s p^2 + p^3) with p the per-row coefficient
/// count (big-O constants taken as 1); NN-OpInf as 3 N_s n_epochs C_eval.
inline double training_cost(TrainKind method, const CostQuery& q) {
    q.validate();
    const double k = static_cast<double>(q.K);
    const double ns = static_cast<double>(q.n_snapshots);
    auto popinf = [&](double p) { return k * (ns * p * p + p * p * p); };
    auto nn = [&](EvalKind kind) {
        return 3.0 * ns * static_cast<double>(q.n_epochs) * eval_cost(kind, q);
    };
    switch (method) {
        case TrainKind::PopinfLinear: return popinf(k);
        case TrainKind::PopinfQuadratic: return popinf(k * (k + 1.0) / 2.0);
        case TrainKind::NnOpinfStandard: return nn(EvalKind::NnOpinfStandard);
        case TrainKind::NnOpinfMatrix: return nn(EvalKind::NnOpinfMatrix);
        case TrainKind::NnOpinfSpsd: return nn(EvalKind::NnOpinfSpsd);
        case TrainKind::NnOpinfSkew: return nn(EvalKind::NnOpinfSkew);
        case TrainKind::SpsdPotential: return nn(EvalKind::SpsdPotential);
    }
    throw DimensionError("training_cost: unknown method");
}

struct RatioRow {
    Index K;
    std::string kind;
    double cost;
    double ratio_vs_linear;
    double ratio_vs_quadratic;
};

/// Figure-style cost-ratio table under the caption assumptions
/// n_h = 3, n_n = K, n_in = K, n_oa = 1.
inline std::vector<RatioRow> ratio_table(const std::vector<EvalKind>& kinds,
                                         const std::vector<Index>& k_values) {
    require(!k_values.empty(), "ratio_table: empty K range");
    std::vector<RatioRow> rows;
    for (Index k : k_values) {
        CostQuery q;
        q.K = k;
        q.n_h = 3;
        q.n_n = k;
        q.n_in = k;
        q.n_oa = 1;
        const double lin = eval_cost(EvalKind::Linear, q);
        const double quad = eval_cost(EvalKind::Quadratic, q);
        for (EvalKind kind : kinds) {
            const double c = eval_cost(kind, q);
            rows.push_back({k, eval_kind_name(kind), c, c / lin, c / quad});
        }
    }
    return rows;
}

inline void save_ratio_table(const std::vector<RatioRow>& rows, std::ostream& os) {
    os << "K,kind,cost,ratio_vs_linear,ratio_vs_quadratic\n";
    for (const auto& r : rows)
        os << r.K << ',' << r.kind << ',' << io::format_double(r.cost) << ','
           << io::format_double(r.ratio_vs_linear) << ',' << io::format_double(r.ratio_vs_quadratic)
           << "\n";
}

inline void save_ratio_table(const std::vector<RatioRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io::FileError("cannot write ratio table to " + path);
    save_ratio_table(rows, os);
}

}  // namespace opinf::cost
