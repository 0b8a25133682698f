#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "opinf/ops/operator.hpp"
#include "opinf/reduction/dataset.hpp"

namespace opinf::ops {

/// Additive composition of structured operators defining reduced dynamics.
/// Operators act in normalized coordinates; the stored scales convert to and
/// from physical reduced units.
struct RomModel {
    Index dim = 0;
    reduction::Scales scales;
    std::vector<StructuredOperator> operators;

    void validate() const {
        require(dim >= 1 && !operators.empty(), "RomModel: need K >= 1 and at least one operator");
        require(scales.state > 0 && scales.velocity > 0 && scales.params > 0,
                "RomModel: scales must be positive");
        for (const auto& op : operators) {
            op.validate();
            require(op.dim == dim, "RomModel: operator dimension mismatch");
        }
    }

    Index n_params() const {
        Index n = 0;
        for (const auto& op : operators) n += op.n_params();
        return n;
    }

    Vec get_params() const {
        Vec out(n_params());
        Index at = 0;
        for (const auto& op : operators) {
            const Vec p = get_operator_params(op);
            out.segment(at, p.size()) = p;
            at += p.size();
        }
        return out;
    }

    void set_params(const Vec& values) {
        require(values.size() == n_params(), "RomModel::set_params: length mismatch");
        Index at = 0;
        for (auto& op : operators) {
            set_operator_params(op, values.segment(at, op.n_params()));
            at += op.n_params();
        }
    }
};

/// Weighted operator sum in normalized coordinates.
inline Vec eval_model_normalized(const RomModel& model, const Vec& x_norm, const Vec& mu_norm) {
    Vec out = Vec::Zero(model.dim);
    for (const auto& op : model.operators) out += op.weight * eval_operator(op, x_norm, mu_norm);
    return out;
}

/// Physical reduced velocity: inputs are divided by the state/parameter
/// scales, the normalized sum is multiplied by the velocity scale. Uniform
/// scalar scaling commutes with every structure class.
inline Vec eval_model(const RomModel& model, const Vec& x, const Vec& mu = Vec()) {
    const Vec mu_norm = mu.size() > 0 ? Vec(mu / model.scales.params) : mu;
    return model.scales.velocity * eval_model_normalized(model, Vec(x / model.scales.state), mu_norm);
}

/// Independently trained models with identical architecture; predictions are
/// the uniform average, which preserves any shared operator structure.
struct EnsembleModel {
    std::vector<RomModel> members;
    std::vector<std::uint64_t> seeds;

    void validate() const {
        require(!members.empty(), "EnsembleModel: need at least one member");
        for (const auto& m : members) {
            m.validate();
            require(m.dim == members.front().dim, "EnsembleModel: member dimensions disagree");
            require(m.operators.size() == members.front().operators.size(),
                    "EnsembleModel: member structures disagree");
        }
    }
};

inline Vec eval_ensemble(const EnsembleModel& ens, const Vec& x, const Vec& mu = Vec()) {
    ens.validate();
    Vec out = Vec::Zero(ens.members.front().dim);
    for (const auto& m : ens.members) out += eval_model(m, x, mu);
    return out / static_cast<double>(ens.members.size());
}

// --- serialization ---------------------------------------------------------
// A model is a directory: manifest.json plus one parameter file per operator
// (network blobs in the mlp format, constants in a small tagged format).

namespace detail {

inline nlohmann::json signature_to_json(const InputSignature& sig) {
    nlohmann::json groups = nlohmann::json::array();
    for (auto g : sig.groups) groups.push_back(g == InputGroup::State ? "state" : "params");
    return nlohmann::json{{"groups", groups}, {"state_dim", sig.state_dim}, {"param_dim", sig.param_dim}};
}

inline InputSignature signature_from_json(const nlohmann::json& j) {
    InputSignature sig;
    sig.state_dim = j.at("state_dim").get<Index>();
    sig.param_dim = j.at("param_dim").get<Index>();
    for (const auto& g : j.at("groups"))
        sig.groups.push_back(g.get<std::string>() == "state" ? InputGroup::State
                                                             : InputGroup::Params);
    return sig;
}

inline void save_constant(const Vec& v, const std::string& path) {
    auto os = io::open_out(path);
    io::write_magic(os, "OIFVEC1\0");
    io::write_u64(os, static_cast<std::uint64_t>(v.size()));
    io::write_f64(os, v.data(), static_cast<std::size_t>(v.size()));
}

inline Vec load_constant(const std::string& path) {
    auto is = io::open_in(path);
    io::expect_magic(is, "OIFVEC1\0", path);
    Vec v(static_cast<Index>(io::read_u64(is)));
    io::read_f64(is, v.data(), static_cast<std::size_t>(v.size()));
    return v;
}

}  // namespace detail

inline void save_model(const RomModel& model, const std::string& dir) {
    model.validate();
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["K"] = model.dim;
    manifest["scales"] = {{"state", model.scales.state},
                          {"velocity", model.scales.velocity},
                          {"params", model.scales.params}};
    nlohmann::json op_list = nlohmann::json::array();
    for (std::size_t i = 0; i < model.operators.size(); ++i) {
        const auto& op = model.operators[i];
        const std::string file = "op" + std::to_string(i) + (op.is_network ? ".mlp" : ".vec");
        if (op.is_network)
            neural::save_mlp(op.net, dir + "/" + file);
        else
            detail::save_constant(op.constant, dir + "/" + file);
        op_list.push_back({{"file", file},
                           {"kind", kind_name(op.kind)},
                           {"weight", op.weight},
                           {"positive_diagonal", op.positive_diagonal},
                           {"network", op.is_network},
                           {"signature", detail::signature_to_json(op.signature)}});
    }
    manifest["operators"] = op_list;
    auto os = io::open_out(dir + "/manifest.json");
    os << manifest.dump(2) << "\n";
}

inline RomModel load_model(const std::string& dir) {
    auto is = io::open_in(dir + "/manifest.json");
    nlohmann::json manifest;
    is >> manifest;
    RomModel model;
    model.dim = manifest.at("K").get<Index>();
    model.scales.state = manifest.at("scales").at("state").get<double>();
    model.scales.velocity = manifest.at("scales").at("velocity").get<double>();
    model.scales.params = manifest.at("scales").at("params").get<double>();
    for (const auto& j : manifest.at("operators")) {
        StructuredOperator op;
        op.kind = kind_from_name(j.at("kind").get<std::string>());
        op.weight = j.at("weight").get<double>();
        op.positive_diagonal = j.at("positive_diagonal").get<bool>();
        op.is_network = j.at("network").get<bool>();
        op.signature = detail::signature_from_json(j.at("signature"));
        op.dim = model.dim;
        const std::string file = dir + "/" + j.at("file").get<std::string>();
        if (op.is_network)
            op.net = neural::load_mlp(file);
        else
            op.constant = detail::load_constant(file);
        op.validate();
        model.operators.push_back(std::move(op));
    }
    model.validate();
    return model;
}

inline void save_ensemble(const EnsembleModel& ens, const std::string& dir) {
    ens.validate();
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["members"] = ens.members.size();
    manifest["seeds"] = ens.seeds;
    auto os = io::open_out(dir + "/ensemble.json");
    os << manifest.dump(2) << "\n";
    for (std::size_t m = 0; m < ens.members.size(); ++m)
        save_model(ens.members[m], dir + "/member" + std::to_string(m));
}

inline EnsembleModel load_ensemble(const std::string& dir) {
    auto is = io::open_in(dir + "/ensemble.json");
    nlohmann::json manifest;
    is >> manifest;
    EnsembleModel ens;
    const auto n = manifest.at("members").get<std::size_t>();
    if (manifest.contains("seeds")) ens.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
    for (std::size_t m = 0; m < n; ++m)
        ens.members.push_back(load_model(dir + "/member" + std::to_string(m)));
    ens.validate();
    return ens;
}

}  // namespace opinf::ops
