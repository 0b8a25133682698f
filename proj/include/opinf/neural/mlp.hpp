#pragma once

#include <string>
#include <vector>

#include "opinf/io.hpp"
#include "opinf/rng.hpp"

namespace opinf::neural {

/// Dense feed-forward network shape: ReLU on hidden layers, identity output.
struct MlpSpec {
    Index n_in;
    Index n_h;   // hidden layer count (0 = single affine map)
    Index n_n;   // hidden width
    Index n_out;

    void validate() const {
        require(n_in >= 1 && n_n >= 1 && n_out >= 1 && n_h >= 0, "MlpSpec: invalid widths");
    }

    Index n_layers() const { return n_h + 1; }
    Index layer_in(Index l) const { return l == 0 ? n_in : n_n; }
    Index layer_out(Index l) const { return l == n_layers() - 1 ? n_out : n_n; }

    Index param_count() const {
        Index c = 0;
        for (Index l = 0; l < n_layers(); ++l) c += layer_out(l) * (layer_in(l) + 1);
        return c;
    }

    bool operator==(const MlpSpec&) const = default;
};

/// Per-layer weights and biases; flatten order is W_0 (column-major), b_0,
/// W_1, b_1, ... so round trips are bit-exact.
struct MlpParams {
    MlpSpec spec;
    std::vector<Mat> weights;
    std::vector<Vec> biases;

    Vec flatten() const {
        Vec out(spec.param_count());
        Index at = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            std::copy(weights[l].data(), weights[l].data() + weights[l].size(), out.data() + at);
            at += weights[l].size();
            std::copy(biases[l].data(), biases[l].data() + biases[l].size(), out.data() + at);
            at += biases[l].size();
        }
        return out;
    }

    void unflatten(const Vec& flat) {
        require(flat.size() == spec.param_count(), "MlpParams::unflatten: length mismatch");
        Index at = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            std::copy(flat.data() + at, flat.data() + at + weights[l].size(), weights[l].data());
            at += weights[l].size();
            std::copy(flat.data() + at, flat.data() + at + biases[l].size(), biases[l].data());
            at += biases[l].size();
        }
    }
};

inline MlpParams zeros(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    p.spec = spec;
    for (Index l = 0; l < spec.n_layers(); ++l) {
        p.weights.emplace_back(Mat::Zero(spec.layer_out(l), spec.layer_in(l)));
        p.biases.emplace_back(Vec::Zero(spec.layer_out(l)));
    }
    return p;
}

/// Kaiming-uniform initialization: weights on [-sqrt(6/fan_in), +sqrt(6/fan_in)]
/// (rectifier gain folded in), biases on [-1/sqrt(fan_in), +1/sqrt(fan_in)].
/// Deterministic per seed.
inline MlpParams init(const MlpSpec& spec, std::uint64_t seed) {
    MlpParams p = zeros(spec);
    Rng rng(mix64(seed, 0x6d6c70ULL));  // "mlp"
    for (Index l = 0; l < spec.n_layers(); ++l) {
        const double fan_in = static_cast<double>(spec.layer_in(l));
        const double bw = std::sqrt(6.0 / fan_in);
        const double bb = 1.0 / std::sqrt(fan_in);
        Mat& w = p.weights[static_cast<std::size_t>(l)];
        for (Index j = 0; j < w.cols(); ++j)
            for (Index i = 0; i < w.rows(); ++i) w(i, j) = rng.symmetric(bw);
        Vec& b = p.biases[static_cast<std::size_t>(l)];
        for (Index i = 0; i < b.size(); ++i) b[i] = rng.symmetric(bb);
    }
    return p;
}

/// Activation record from one forward pass. `inputs[l]` is the input to
/// layer l; `masks[l]` is the ReLU pattern after layer l (hidden layers only,
/// with the subgradient at exactly 0 taken as 0).
struct MlpCache {
    MlpSpec spec;
    std::vector<Vec> inputs;
    std::vector<Vec> masks;
    Vec output;
};

inline Vec forward(const MlpParams& p, const Vec& x, MlpCache* cache = nullptr) {
    require(x.size() == p.spec.n_in, "forward: input width mismatch");
    const Index L = p.spec.n_layers();
    if (cache) {
        cache->spec = p.spec;
        cache->inputs.assign(static_cast<std::size_t>(L), Vec());
        cache->masks.assign(static_cast<std::size_t>(L - 1), Vec());
    }
    Vec h = x;
    for (Index l = 0; l < L; ++l) {
        if (cache) cache->inputs[static_cast<std::size_t>(l)] = h;
        Vec z = p.weights[static_cast<std::size_t>(l)] * h + p.biases[static_cast<std::size_t>(l)];
        if (l < L - 1) {
            Vec mask(z.size());
            for (Index i = 0; i < z.size(); ++i) mask[i] = z[i] > 0.0 ? 1.0 : 0.0;
            h = mask.cwiseProduct(z);
            if (cache) cache->masks[static_cast<std::size_t>(l)] = mask;
        } else {
            h = std::move(z);
        }
    }
    if (cache) cache->output = h;
    return h;
}

namespace detail {
inline void check_cache(const MlpParams& p, const MlpCache& cache) {
    require(cache.spec == p.spec && cache.inputs.size() == static_cast<std::size_t>(p.spec.n_layers()),
            "mlp gradient: cache does not match these parameters (stale cache)");
}
}  // namespace detail

/// Reverse-mode gradient of <adjoint, output> with respect to all parameters,
/// in flatten() order.
inline Vec grad_params(const MlpParams& p, const MlpCache& cache, const Vec& adjoint) {
    detail::check_cache(p, cache);
    require(adjoint.size() == p.spec.n_out, "grad_params: adjoint width mismatch");
    const Index L = p.spec.n_layers();
    Vec grad(p.spec.param_count());
    Index tail = grad.size();
    Vec delta = adjoint;
    for (Index l = L - 1; l >= 0; --l) {
        const Vec& h = cache.inputs[static_cast<std::size_t>(l)];
        const Index nw = p.weights[static_cast<std::size_t>(l)].size();
        const Index nb = delta.size();
        tail -= nw + nb;
        Eigen::Map<Mat>(grad.data() + tail, delta.size(), h.size()) = delta * h.transpose();
        grad.segment(tail + nw, nb) = delta;
        if (l > 0) {
            delta = cache.masks[static_cast<std::size_t>(l - 1)].cwiseProduct(
                p.weights[static_cast<std::size_t>(l)].transpose() * delta);
        }
    }
    return grad;
}

/// Reverse-mode gradient of <adjoint, output> with respect to the input.
inline Vec grad_input(const MlpParams& p, const MlpCache& cache, const Vec& adjoint) {
    detail::check_cache(p, cache);
    require(adjoint.size() == p.spec.n_out, "grad_input: adjoint width mismatch");
    const Index L = p.spec.n_layers();
    Vec delta = adjoint;
    for (Index l = L - 1; l > 0; --l)
        delta = cache.masks[static_cast<std::size_t>(l - 1)].cwiseProduct(
            p.weights[static_cast<std::size_t>(l)].transpose() * delta);
    return p.weights[0].transpose() * delta;
}

/// Forward-mode tangents of the layer inputs and output for an input-direction
/// perturbation, with the activation pattern frozen at the cached point.
struct MlpTangent {
    std::vector<Vec> inputs;  // tangent of cache.inputs
    Vec output;
};

inline MlpTangent forward_tangent(const MlpParams& p, const MlpCache& cache, const Vec& x_dot) {
    detail::check_cache(p, cache);
    require(x_dot.size() == p.spec.n_in, "forward_tangent: tangent width mismatch");
    const Index L = p.spec.n_layers();
    MlpTangent t;
    t.inputs.assign(static_cast<std::size_t>(L), Vec());
    Vec hd = x_dot;
    for (Index l = 0; l < L; ++l) {
        t.inputs[static_cast<std::size_t>(l)] = hd;
        Vec zd = p.weights[static_cast<std::size_t>(l)] * hd;
        hd = (l < L - 1) ? Vec(cache.masks[static_cast<std::size_t>(l)].cwiseProduct(zd))
                         : std::move(zd);
    }
    t.output = hd;
    return t;
}

/// Directional derivative (along the input tangent that produced `tangent`,
/// with adjoint tangent `adjoint_dot`) of grad_params. This is the
/// forward-over-reverse pass used for gradient-of-gradient operators; ReLU
/// masks are frozen, matching standard double-backward semantics.
inline Vec grad_params_tangent(const MlpParams& p, const MlpCache& cache, const MlpTangent& tangent,
                               const Vec& adjoint, const Vec& adjoint_dot) {
    detail::check_cache(p, cache);
    require(adjoint.size() == p.spec.n_out && adjoint_dot.size() == p.spec.n_out,
            "grad_params_tangent: adjoint width mismatch");
    const Index L = p.spec.n_layers();
    Vec grad(p.spec.param_count());
    Index tail = grad.size();
    Vec delta = adjoint;
    Vec delta_dot = adjoint_dot;
    for (Index l = L - 1; l >= 0; --l) {
        const Vec& h = cache.inputs[static_cast<std::size_t>(l)];
        const Vec& hd = tangent.inputs[static_cast<std::size_t>(l)];
        const Index nw = p.weights[static_cast<std::size_t>(l)].size();
        const Index nb = delta.size();
        tail -= nw + nb;
        Eigen::Map<Mat>(grad.data() + tail, delta.size(), h.size()) =
            delta_dot * h.transpose() + delta * hd.transpose();
        grad.segment(tail + nw, nb) = delta_dot;
        if (l > 0) {
            const Vec& mask = cache.masks[static_cast<std::size_t>(l - 1)];
            const Mat& w = p.weights[static_cast<std::size_t>(l)];
            delta = mask.cwiseProduct(w.transpose() * delta);
            delta_dot = mask.cwiseProduct(w.transpose() * delta_dot);
        }
    }
    return grad;
}

// --- serialization ---------------------------------------------------------
// "OIFMLP1\0", u64 n_in, n_h, n_n, n_out, u64 parameter count, flat f64.

inline void save_mlp(const MlpParams& p, std::ostream& os) {
    io::write_magic(os, "OIFMLP1\0");
    io::write_u64(os, static_cast<std::uint64_t>(p.spec.n_in));
    io::write_u64(os, static_cast<std::uint64_t>(p.spec.n_h));
    io::write_u64(os, static_cast<std::uint64_t>(p.spec.n_n));
    io::write_u64(os, static_cast<std::uint64_t>(p.spec.n_out));
    const Vec flat = p.flatten();
    io::write_u64(os, static_cast<std::uint64_t>(flat.size()));
    io::write_f64(os, flat.data(), static_cast<std::size_t>(flat.size()));
}

inline MlpParams load_mlp(std::istream& is, const std::string& what = "mlp") {
    io::expect_magic(is, "OIFMLP1\0", what);
    MlpSpec spec{static_cast<Index>(io::read_u64(is)), static_cast<Index>(io::read_u64(is)),
                 static_cast<Index>(io::read_u64(is)), static_cast<Index>(io::read_u64(is))};
    spec.validate();
    const auto count = static_cast<Index>(io::read_u64(is));
    require(count == spec.param_count(), "load_mlp: parameter count mismatch");
    Vec flat(count);
    io::read_f64(is, flat.data(), static_cast<std::size_t>(count));
    MlpParams p = zeros(spec);
    p.unflatten(flat);
    return p;
}

inline void save_mlp(const MlpParams& p, const std::string& path) {
    auto os = io::open_out(path);
    save_mlp(p, os);
}

inline MlpParams load_mlp(const std::string& path) {
    auto is = io::open_in(path);
    return load_mlp(is, path);
}

}  // namespace opinf::neural
