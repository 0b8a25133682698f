#pragma once

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "opinf/pipeline/catalog.hpp"
#include "opinf/rng.hpp"
#include "opinf/train/settings.hpp"

namespace opinf::pipeline {

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// One experiment run: id, reduced dimensions, model families, seeds, and
/// optional overrides of training settings and FOM discretization.
struct ExperimentConfig {
    std::string experiment;
    std::vector<Index> dims;
    std::vector<std::string> families;
    std::uint64_t seed = 1;
    std::string output_dir;  // optional; the CLI --out flag overrides

    train::TrainingSettings training;

    // FOM overrides (defaults come from the experiment catalog)
    Index cells = 0;  // burgers; 0 = catalog default
    Index nx = 0, ny = 0;
    double dt = 0.0;

    ExperimentDefaults resolved() const {
        ExperimentDefaults d = experiment_defaults(experiment);
        if (cells > 0) d.cells = cells;
        if (nx > 0) d.nx = nx;
        if (ny > 0) d.ny = ny;
        if (dt > 0.0) d.dt = dt;
        if (!dims.empty()) d.dims = dims;
        d.families = families;  // may be empty: run produces an empty table
        return d;
    }

    void validate() const {
        experiment_defaults(experiment);  // throws on unknown id
        for (Index k : dims)
            if (k < 1) throw ConfigError("dims entries must be >= 1");
        for (const auto& f : families) {
            const auto& known = family_names();
            if (std::find(known.begin(), known.end(), f) == known.end())
                throw ConfigError("unknown model family: " + f);
        }
        try {
            training.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unrecognized key \"" + it.key() + "\" in " + where);
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    detail::reject_unknown_keys(
        j, {"experiment", "dims", "families", "seed", "output", "training", "fom"}, "config");
    ExperimentConfig cfg;
    try {
        cfg.experiment = j.at("experiment").get<std::string>();
        if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<Index>>();
        if (j.contains("families")) cfg.families = j.at("families").get<std::vector<std::string>>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output")) cfg.output_dir = j.at("output").get<std::string>();
        if (j.contains("training")) {
            const auto& t = j.at("training");
            detail::reject_unknown_keys(t,
                                        {"epochs", "batch_size", "learning_rate", "lr_decay",
                                         "weight_decay", "lbfgs_every", "lbfgs_steps",
                                         "lbfgs_history", "ensemble"},
                                        "config.training");
            auto& s = cfg.training;
            if (t.contains("epochs")) s.epochs = t.at("epochs").get<Index>();
            if (t.contains("batch_size")) s.batch_size = t.at("batch_size").get<Index>();
            if (t.contains("learning_rate")) s.learning_rate = t.at("learning_rate").get<double>();
            if (t.contains("lr_decay")) s.lr_decay = t.at("lr_decay").get<double>();
            if (t.contains("weight_decay")) s.weight_decay = t.at("weight_decay").get<double>();
            if (t.contains("lbfgs_every")) s.lbfgs_every = t.at("lbfgs_every").get<Index>();
            if (t.contains("lbfgs_steps")) s.lbfgs_steps = t.at("lbfgs_steps").get<Index>();
            if (t.contains("lbfgs_history")) s.lbfgs_history = t.at("lbfgs_history").get<Index>();
            if (t.contains("ensemble")) s.ensemble = t.at("ensemble").get<Index>();
        }
        if (j.contains("fom")) {
            const auto& f = j.at("fom");
            detail::reject_unknown_keys(f, {"cells", "nx", "ny", "dt"}, "config.fom");
            if (f.contains("cells")) cfg.cells = f.at("cells").get<Index>();
            if (f.contains("nx")) cfg.nx = f.at("nx").get<Index>();
            if (f.contains("ny")) cfg.ny = f.at("ny").get<Index>();
            if (f.contains("dt")) cfg.dt = f.at("dt").get<double>();
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.experiment;
    j["dims"] = cfg.dims;
    j["families"] = cfg.families;
    j["seed"] = cfg.seed;
    if (!cfg.output_dir.empty()) j["output"] = cfg.output_dir;
    j["training"] = {{"epochs", cfg.training.epochs},
                     {"batch_size", cfg.training.batch_size},
                     {"learning_rate", cfg.training.learning_rate},
                     {"lr_decay", cfg.training.lr_decay},
                     {"weight_decay", cfg.training.weight_decay},
                     {"lbfgs_every", cfg.training.lbfgs_every},
                     {"lbfgs_steps", cfg.training.lbfgs_steps},
                     {"lbfgs_history", cfg.training.lbfgs_history},
                     {"ensemble", cfg.training.ensemble}};
    nlohmann::json fom;
    if (cfg.cells > 0) fom["cells"] = cfg.cells;
    if (cfg.nx > 0) fom["nx"] = cfg.nx;
    if (cfg.ny > 0) fom["ny"] = cfg.ny;
    if (cfg.dt > 0.0) fom["dt"] = cfg.dt;
    if (!fom.empty()) j["fom"] = fom;
    return j;
}

/// Stable hash of the canonical config serialization; recorded in run
/// metadata and error messages so any run can be replayed.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a(config_to_json(cfg).dump());
}

}  // namespace opinf::pipeline
