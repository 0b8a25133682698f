#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "opinf/io.hpp"
#include "opinf/poly/packing.hpp"

namespace opinf::poly {

/// Polynomial reduced operators: optional constant forcing c, linear A, and
/// quadratic H acting on the packed symmetric square.
struct PolyOperators {
    std::optional<Vec> c;  // K
    std::optional<Mat> A;  // K x K
    std::optional<Mat> H;  // K x K(K+1)/2
    double lambda = 0.0;   // regularization used in the fit, for provenance

    Index reduced_dim() const {
        if (c) return c->size();
        if (A) return A->rows();
        if (H) return H->rows();
        return 0;
    }

    void validate() const {
        const Index k = reduced_dim();
        require(k > 0, "PolyOperators: no blocks present");
        if (c) require(c->size() == k, "PolyOperators: c dimension mismatch");
        if (A) require(A->rows() == k && A->cols() == k, "PolyOperators: A dimension mismatch");
        if (H) require(H->rows() == k && H->cols() == sqr_size(k),
                       "PolyOperators: H must be K x K(K+1)/2");
    }
};

/// dx = A x + H sqr(x) + c, summing whichever blocks are present.
inline Vec eval_poly_rhs(const PolyOperators& ops, const Vec& x) {
    ops.validate();
    require(x.size() == ops.reduced_dim(), "eval_poly_rhs: state dimension mismatch");
    Vec out = Vec::Zero(x.size());
    if (ops.A) out += (*ops.A) * x;
    if (ops.H) out += (*ops.H) * sqr_pack(x);
    if (ops.c) out += *ops.c;
    return out;
}

// --- serialization (JSON with base64 little-endian f64 payloads) -----------

inline nlohmann::json poly_to_json(const PolyOperators& ops) {
    ops.validate();
    const Index k = ops.reduced_dim();
    nlohmann::json j;
    j["K"] = k;
    j["s"] = sqr_size(k);
    j["lambda"] = ops.lambda;
    if (ops.c) j["c"] = io::base64_encode(ops.c->data(), static_cast<std::size_t>(ops.c->size()));
    if (ops.A) j["A"] = io::base64_encode(ops.A->data(), static_cast<std::size_t>(ops.A->size()));
    if (ops.H) j["H"] = io::base64_encode(ops.H->data(), static_cast<std::size_t>(ops.H->size()));
    return j;
}

inline PolyOperators poly_from_json(const nlohmann::json& j) {
    PolyOperators ops;
    const Index k = j.at("K").get<Index>();
    ops.lambda = j.value("lambda", 0.0);
    auto decode_mat = [&](const std::string& text, Index rows, Index cols) {
        const auto values = io::base64_decode_f64(text);
        require(static_cast<Index>(values.size()) == rows * cols,
                "PolyOperators: payload size mismatch");
        Mat m(rows, cols);
        std::copy(values.begin(), values.end(), m.data());
        return m;
    };
    if (j.contains("c")) ops.c = Vec(decode_mat(j.at("c").get<std::string>(), k, 1));
    if (j.contains("A")) ops.A = decode_mat(j.at("A").get<std::string>(), k, k);
    if (j.contains("H")) ops.H = decode_mat(j.at("H").get<std::string>(), k, sqr_size(k));
    ops.validate();
    return ops;
}

inline void save_poly(const PolyOperators& ops, const std::string& path) {
    auto os = io::open_out(path);
    os << poly_to_json(ops).dump(2) << "\n";
}

inline PolyOperators load_poly(const std::string& path) {
    auto is = io::open_in(path);
    nlohmann::json j;
    is >> j;
    return poly_from_json(j);
}

}  // namespace opinf::poly
