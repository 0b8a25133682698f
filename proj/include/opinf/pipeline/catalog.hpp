#pragma once

#include <string>
#include <vector>

#include "opinf/common.hpp"

namespace opinf::pipeline {

inline const std::vector<std::string>& family_names() {
    static const std::vector<std::string> names = {
        "Galerkin",     "P-OpInf-A",   "P-OpInf-AH",  "P-OpInf-cA",
        "P-OpInf-cAH",  "NN-OpInf-NN", "NN-OpInf-SS", "NN-OpInf-SPSD-f"};
    return names;
}

inline bool is_poly_family(const std::string& f) { return f.rfind("P-OpInf", 0) == 0; }
inline bool is_nn_family(const std::string& f) { return f.rfind("NN-OpInf", 0) == 0; }

/// Per-experiment defaults: grids, time windows, reduced dimensions, and the
/// model families compared in the corresponding study.
struct ExperimentDefaults {
    std::string id;
    std::string description;
    bool burgers = true;

    // Burgers discretization
    Index cells = 500;
    // Heat discretization
    Index nx = 50;
    Index ny = 50;

    double dt = 1e-2;
    double t_train = 4.0;  // snapshots used for training span [0, t_train]
    double t_eval = 4.0;   // predictions and error metric span [0, t_eval]

    std::vector<Index> dims;
    std::vector<std::string> families;

    // heat parameters; parametric experiments train on the k1 x Tc lattice
    double k1 = 0.2;
    double Tc = 0.3;
    std::vector<double> k1_lattice;
    std::vector<double> tc_lattice;
    Index n_test_draws = 4;

    bool parametric() const { return !k1_lattice.empty(); }
};

inline std::vector<ExperimentDefaults> list_experiments() {
    std::vector<ExperimentDefaults> out;

    ExperimentDefaults br;
    br.id = "burgers-reproductive";
    br.description = "periodic Burgers, train and predict on t in [0,4]";
    br.burgers = true;
    br.cells = 500;
    br.dt = 1e-2;
    br.t_train = 4.0;
    br.t_eval = 4.0;
    br.dims = {4, 8, 12};
    br.families = {"Galerkin", "P-OpInf-A", "P-OpInf-AH", "NN-OpInf-NN", "NN-OpInf-SS"};
    out.push_back(br);

    ExperimentDefaults bf = br;
    bf.id = "burgers-future";
    bf.description = "periodic Burgers, train on t in [0,1], predict on t in [0,4]";
    bf.t_train = 1.0;
    out.push_back(bf);

    ExperimentDefaults hr;
    hr.id = "heat-reproductive";
    hr.description = "2D nonlinear heat, train and predict on t in [0,2] at k1=0.2, Tc=0.3";
    hr.burgers = false;
    hr.nx = 50;
    hr.ny = 50;
    hr.dt = 1e-3;
    hr.t_train = 2.0;
    hr.t_eval = 2.0;
    hr.dims = {4, 10};
    hr.families = {"P-OpInf-cA", "P-OpInf-cAH", "NN-OpInf-NN", "NN-OpInf-SPSD-f"};
    hr.k1 = 0.2;
    hr.Tc = 0.3;
    out.push_back(hr);

    ExperimentDefaults hf = hr;
    hf.id = "heat-future";
    hf.description = "2D nonlinear heat, train on t in [0,1], predict on t in [0,2]";
    hf.t_train = 1.0;
    hf.dims = {10};
    out.push_back(hf);

    ExperimentDefaults hp = hr;
    hp.id = "heat-parametric";
    hp.description =
        "2D nonlinear heat, train on the (k1, Tc) lattice {0.2,0.4}x{0.3,0.4}, "
        "test on 4 seeded draws from the lattice box";
    hp.dims = {10};
    hp.k1_lattice = {0.2, 0.4};
    hp.tc_lattice = {0.3, 0.4};
    hp.n_test_draws = 4;
    out.push_back(hp);

    return out;
}

inline const ExperimentDefaults& experiment_defaults(const std::string& id) {
    static const std::vector<ExperimentDefaults> catalog = list_experiments();
    for (const auto& e : catalog)
        if (e.id == id) return e;
    throw DimensionError("unknown experiment id: " + id);
}

}  // namespace opinf::pipeline
