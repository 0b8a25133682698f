#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

#include "opinf/fom/simulate.hpp"
#include "opinf/ops/model.hpp"
#include "opinf/pipeline/config.hpp"
#include "opinf/poly/grid_search.hpp"
#include "opinf/poly/interpolate.hpp"
#include "opinf/reduction/derivatives.hpp"
#include "opinf/reduction/pod.hpp"
#include "opinf/romeval/galerkin.hpp"
#include "opinf/romeval/metrics.hpp"
#include "opinf/train/train.hpp"

namespace opinf::pipeline {

/// A stage failed mid-run (CLI exit code 3).
class PipelineError : public std::runtime_error {
public:
    PipelineError(const std::string& stage, std::uint64_t hash, const std::string& what)
        : std::runtime_error("stage " + stage + " failed (config " + to_hex(hash) + "): " + what),
          stage_name(stage) {}
    std::string stage_name;

    static std::string to_hex(std::uint64_t h) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

struct ResultRow {
    std::string experiment;
    std::string family;
    Index K = 0;
    std::string mu;     // "k1=...;Tc=..." or empty
    std::string split;  // "train" | "test"
    double e = 0.0;
    bool stable = true;
    std::optional<double> energy_drift;  // relative, Burgers runs only
};

/// One evaluated ROM trajectory with its diagnostics (used by tests; the CSV
/// carries only the ResultRow portion).
struct CaseResult {
    ResultRow row;
    double drift_after_train = 0.0;  // relative energy violation past t_train
    double wall_time_s = 0.0;
    bool truncated = false;
};

struct FittedModel {
    std::string family;
    Index k = 0;
    std::optional<poly::PolyOperators> poly_ops;       // non-parametric P-OpInf
    std::optional<poly::OperatorLattice> lattice;      // parametric P-OpInf
    std::optional<ops::EnsembleModel> ensemble;        // NN families
    double lambda = 0.0;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<CaseResult> cases;
    std::string results_path;
};

// ---------------------------------------------------------------------------

struct PipelineState {
    ExperimentConfig cfg;
    ExperimentDefaults def;
    std::string out;

    std::vector<fom::Trajectory> train_trajs;  // simulated over [0, t_eval]
    std::vector<fom::Trajectory> test_trajs;   // parametric draws
    reduction::PodBasis basis;                 // at K_max

    Index max_dim() const {
        Index m = 1;
        for (Index k : def.dims) m = std::max(m, k);
        return m;
    }

    /// Columns of a trajectory inside the training window [0, t_train].
    Index train_cols(const fom::Trajectory& t) const {
        Index n = 0;
        while (n < t.times.size() && t.times[n] <= def.t_train + 1e-12) ++n;
        return n;
    }

    fom::Grid1D grid1() const { return fom::Grid1D(def.cells, 2.0 * M_PI); }
    fom::Grid2D grid2() const { return fom::Grid2D(def.nx, def.ny); }

    std::string traj_path(const std::string& tag, std::size_t i) const {
        return out + "/trajectories/" + tag + std::to_string(i) + ".traj";
    }
    std::string pod_path() const { return out + "/pod/basis.pod"; }
    std::string model_tag(const std::string& family, Index k) const {
        return family + "_K" + std::to_string(k);
    }
};

namespace detail {

inline Vec draw_test_params(const ExperimentDefaults& def, std::uint64_t seed, Index i) {
    // Seeded draws from the training lattice box, where the interpolatory
    // parametric model is defined.
    Rng rng(mix64(mix64(seed, fnv1a("test-draws")), static_cast<std::uint64_t>(i)));
    Vec mu(2);
    mu[0] = rng.uniform(def.k1_lattice.front(), def.k1_lattice.back());
    mu[1] = rng.uniform(def.tc_lattice.front(), def.tc_lattice.back());
    return mu;
}

inline std::string mu_label(const Vec& mu) {
    if (mu.size() == 0) return "";
    return "k1=" + io::format_double(mu[0]) + ";Tc=" + io::format_double(mu[1]);
}

template <typename F>
void for_each_parallel(Index n, Index jobs, F&& f) {
    if (jobs <= 1 || n <= 1) {
        for (Index i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const Index i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const Index workers = std::min(jobs, n);
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

// --- stage: simulate --------------------------------------------------------

inline void stage_simulate(PipelineState& s) {
    std::filesystem::create_directories(s.out + "/trajectories");
    const fom::SimulateOptions opt{s.def.t_eval, s.def.dt, 1};
    if (s.def.burgers) {
        s.train_trajs.push_back(fom::simulate_burgers(s.grid1(), opt));
    } else if (!s.def.parametric()) {
        s.train_trajs.push_back(fom::simulate_heat(s.grid2(), {s.def.k1, s.def.Tc}, opt));
    } else {
        for (double tc : s.def.tc_lattice)
            for (double k1 : s.def.k1_lattice)
                s.train_trajs.push_back(fom::simulate_heat(s.grid2(), {k1, tc}, opt));
        for (Index i = 0; i < s.def.n_test_draws; ++i) {
            const Vec mu = detail::draw_test_params(s.def, s.cfg.seed, i);
            s.test_trajs.push_back(fom::simulate_heat(s.grid2(), {mu[0], mu[1]}, opt));
        }
    }
    for (std::size_t i = 0; i < s.train_trajs.size(); ++i)
        fom::save_trajectory(s.train_trajs[i], s.traj_path("train", i));
    for (std::size_t i = 0; i < s.test_trajs.size(); ++i)
        fom::save_trajectory(s.test_trajs[i], s.traj_path("test", i));
}

inline void load_trajectories(PipelineState& s) {
    s.train_trajs.clear();
    s.test_trajs.clear();
    const std::size_t n_train = s.def.parametric()
                                    ? s.def.k1_lattice.size() * s.def.tc_lattice.size()
                                    : 1;
    for (std::size_t i = 0; i < n_train; ++i)
        s.train_trajs.push_back(fom::load_trajectory(s.traj_path("train", i)));
    if (s.def.parametric())
        for (Index i = 0; i < s.def.n_test_draws; ++i)
            s.test_trajs.push_back(
                fom::load_trajectory(s.traj_path("test", static_cast<std::size_t>(i))));
}

// --- stage: reduce ----------------------------------------------------------

inline void stage_reduce(PipelineState& s) {
    std::filesystem::create_directories(s.out + "/pod");
    std::vector<Mat> blocks;
    for (const auto& t : s.train_trajs) blocks.push_back(t.states.leftCols(s.train_cols(t)));
    s.basis = reduction::compute_pod(reduction::SnapshotMatrix::from_blocks(blocks), s.max_dim());
    reduction::save_pod(s.basis, s.pod_path());
}

inline void load_pod(PipelineState& s) { s.basis = reduction::load_pod(s.pod_path()); }

// --- stage: fit/train -------------------------------------------------------

namespace detail {

inline poly::Blocks family_blocks(const std::string& family) {
    if (family == "P-OpInf-A") return poly::Blocks::a();
    if (family == "P-OpInf-AH") return poly::Blocks::ah();
    if (family == "P-OpInf-cA") return poly::Blocks::ca();
    if (family == "P-OpInf-cAH") return poly::Blocks::cah();
    throw DimensionError("not a polynomial family: " + family);
}

inline ops::RomModel build_nn_model(const std::string& family, Index k, Index param_dim,
                                    std::uint64_t seed, const reduction::Scales& scales) {
    ops::RomModel model;
    model.dim = k;
    model.scales = scales;
    const Index hidden_layers = 3;
    const Index hidden_width = k;
    const auto sig = param_dim > 0 ? ops::InputSignature::state_params(k, param_dim)
                                   : ops::InputSignature::state(k);
    if (family == "NN-OpInf-NN") {
        model.operators.push_back(ops::make_network_operator(
            ops::OperatorKind::Standard, sig, k, hidden_layers, hidden_width, mix64(seed, 1)));
    } else if (family == "NN-OpInf-SS") {
        model.operators.push_back(ops::make_network_operator(
            ops::OperatorKind::Skew, sig, k, hidden_layers, hidden_width, mix64(seed, 1)));
    } else if (family == "NN-OpInf-SPSD-f") {
        model.operators.push_back(ops::make_network_operator(ops::OperatorKind::Spsd, sig, k,
                                                             hidden_layers, hidden_width,
                                                             mix64(seed, 1), -1.0, true));
        if (param_dim > 0)
            model.operators.push_back(
                ops::make_network_operator(ops::OperatorKind::Vector,
                                           ops::InputSignature::params(param_dim), k,
                                           hidden_layers, hidden_width, mix64(seed, 2)));
        else
            model.operators.push_back(
                ops::make_constant_operator(ops::OperatorKind::Vector, k, Vec::Zero(k)));
    } else {
        throw DimensionError("not a neural family: " + family);
    }
    model.validate();
    return model;
}

struct TrainingArrays {
    Mat states;      // K x n raw reduced states over the training windows
    Mat velocities;  // K x n raw reduced velocities
    Mat params;      // p x n (0 rows when non-parametric)
};

inline TrainingArrays pooled_training_data(const PipelineState& s, Index k, bool with_params) {
    const Mat vk = s.basis.V.leftCols(k);
    Index total = 0;
    for (const auto& t : s.train_trajs) total += s.train_cols(t);
    TrainingArrays a;
    a.states.resize(k, total);
    a.velocities.resize(k, total);
    a.params.resize(with_params ? s.train_trajs.front().params.size() : 0, total);
    Index at = 0;
    for (const auto& t : s.train_trajs) {
        const Index n = s.train_cols(t);
        a.states.middleCols(at, n) = vk.transpose() * t.states.leftCols(n);
        a.velocities.middleCols(at, n) = vk.transpose() * t.rhs.leftCols(n);
        if (with_params) a.params.middleCols(at, n) = t.params.replicate(1, n);
        at += n;
    }
    return a;
}

}  // namespace detail

/// Fits one (family, K) work item and writes its model artifacts.
inline FittedModel stage_fit_one(const PipelineState& s, const std::string& family, Index k) {
    FittedModel fitted;
    fitted.family = family;
    fitted.k = k;
    if (family == "Galerkin") return fitted;

    const std::string tag = s.model_tag(family, k);
    const Mat vk = s.basis.V.leftCols(k);
    std::filesystem::create_directories(s.out + "/models");
    std::filesystem::create_directories(s.out + "/history");

    if (is_poly_family(family)) {
        const auto blocks = detail::family_blocks(family);
        std::vector<poly::FitTrajectory> fit_trajs;
        for (const auto& t : s.train_trajs) {
            const Index n = s.train_cols(t);
            fit_trajs.push_back({Mat(vk.transpose() * t.states.leftCols(n)),
                                 Mat(vk.transpose() * t.rhs.leftCols(n)),
                                 Vec(t.times.head(n))});
        }
        std::vector<poly::PolyOperators> per_traj;
        const auto search =
            poly::grid_search_multi(fit_trajs, poly::RegSearchSpec::standard(), blocks, &per_traj);
        fitted.lambda = search.lambda;
        if (!s.def.parametric()) {
            fitted.poly_ops = per_traj.front();
            poly::save_poly(*fitted.poly_ops, s.out + "/models/" + tag + ".json");
        } else {
            poly::OperatorLattice lattice;
            lattice.axes = {s.def.k1_lattice, s.def.tc_lattice};
            // train_trajs are ordered tc-major, k1 fastest; the lattice is
            // row-major with the last axis fastest, i.e. ops[(i_k1)*n_tc + i_tc].
            const Index n_k1 = static_cast<Index>(s.def.k1_lattice.size());
            const Index n_tc = static_cast<Index>(s.def.tc_lattice.size());
            lattice.ops.resize(static_cast<std::size_t>(n_k1 * n_tc));
            for (Index itc = 0; itc < n_tc; ++itc)
                for (Index ik1 = 0; ik1 < n_k1; ++ik1)
                    lattice.ops[static_cast<std::size_t>(ik1 * n_tc + itc)] =
                        per_traj[static_cast<std::size_t>(itc * n_k1 + ik1)];
            lattice.validate();
            const std::string dir = s.out + "/models/" + tag + "_lattice";
            std::filesystem::create_directories(dir);
            nlohmann::json meta;
            meta["k1"] = s.def.k1_lattice;
            meta["Tc"] = s.def.tc_lattice;
            meta["lambda"] = search.lambda;
            auto os = io::open_out(dir + "/lattice.json");
            os << meta.dump(2) << "\n";
            for (std::size_t i = 0; i < lattice.ops.size(); ++i)
                poly::save_poly(lattice.ops[i], dir + "/node" + std::to_string(i) + ".json");
            fitted.lattice = std::move(lattice);
        }
        return fitted;
    }

    // Neural families: pooled training data, per-member splits and scales.
    const bool with_params = s.def.parametric();
    const auto data = detail::pooled_training_data(s, k, with_params);
    train::TrainingSettings settings = s.cfg.training;
    settings.seed = mix64(mix64(s.cfg.seed, fnv1a(family)), static_cast<std::uint64_t>(k));
    auto builder = [&](std::uint64_t member_seed, const reduction::ReducedDataset& ds) {
        return detail::build_nn_model(family, k, ds.param_dim(), member_seed, ds.scales);
    };
    auto result =
        train::train_ensemble(builder, data.states, data.velocities, data.params, settings);
    fitted.ensemble = result.ensemble;
    ops::save_ensemble(*fitted.ensemble, s.out + "/models/" + tag);
    for (std::size_t m = 0; m < result.members.size(); ++m)
        train::save_history(result.members[m].history,
                            s.out + "/history/" + tag + "_m" + std::to_string(m) + ".csv");
    return fitted;
}

inline FittedModel load_fitted(const PipelineState& s, const std::string& family, Index k) {
    FittedModel fitted;
    fitted.family = family;
    fitted.k = k;
    if (family == "Galerkin") return fitted;
    const std::string tag = s.model_tag(family, k);
    if (is_poly_family(family)) {
        if (!s.def.parametric()) {
            fitted.poly_ops = poly::load_poly(s.out + "/models/" + tag + ".json");
        } else {
            poly::OperatorLattice lattice;
            lattice.axes = {s.def.k1_lattice, s.def.tc_lattice};
            const std::size_t n = lattice.axes[0].size() * lattice.axes[1].size();
            const std::string dir = s.out + "/models/" + tag + "_lattice";
            for (std::size_t i = 0; i < n; ++i)
                lattice.ops.push_back(poly::load_poly(dir + "/node" + std::to_string(i) + ".json"));
            lattice.validate();
            fitted.lattice = std::move(lattice);
        }
    } else {
        fitted.ensemble = ops::load_ensemble(s.out + "/models/" + tag);
    }
    return fitted;
}

// --- stage: evaluate --------------------------------------------------------

namespace detail {

/// Reduced right-hand side for one (family, model, mu) combination.
inline std::function<Vec(const Vec&)> reduced_rhs(const PipelineState& s, const FittedModel& fitted,
                                                  const Mat& vk, const Vec& mu) {
    if (fitted.family == "Galerkin") {
        if (s.def.burgers) {
            const auto grid = s.grid1();
            return [&s, vk, grid](const Vec& x) {
                return Vec(vk.transpose() * fom::burgers_rhs(Vec(vk * x), grid));
            };
        }
        const auto grid = s.grid2();
        const fom::HeatParams p =
            mu.size() > 0 ? fom::HeatParams(mu[0], mu[1]) : fom::HeatParams(s.def.k1, s.def.Tc);
        return [vk, grid, p](const Vec& x) {
            return Vec(vk.transpose() * fom::heat_rhs(Vec(vk * x), grid, p));
        };
    }
    if (fitted.poly_ops) {
        const poly::PolyOperators ops = *fitted.poly_ops;
        return [ops](const Vec& x) { return eval_poly_rhs(ops, x); };
    }
    if (fitted.lattice) {
        const poly::PolyOperators ops = poly::interpolate(*fitted.lattice, mu);
        return [ops](const Vec& x) { return eval_poly_rhs(ops, x); };
    }
    const ops::EnsembleModel ens = *fitted.ensemble;
    const Vec mu_in = ens.members.front().operators.front().signature.uses_params() ? mu : Vec();
    return [ens, mu_in](const Vec& x) { return eval_ensemble(ens, x, mu_in); };
}

inline CaseResult evaluate_case(const PipelineState& s, const FittedModel& fitted, const Mat& vk,
                                const fom::Trajectory& reference, const std::string& split) {
    const auto t0 = std::chrono::steady_clock::now();
    const Vec x0 = vk.transpose() * reference.states.col(0);
    auto rhs = reduced_rhs(s, fitted, vk, reference.params);
    romeval::RomRun run = romeval::integrate_rom(rhs, x0, reference.times);
    const Mat lifted = vk * run.trajectory;

    CaseResult result;
    result.row.experiment = s.def.id;
    result.row.family = fitted.family;
    result.row.K = fitted.k;
    result.row.mu = mu_label(reference.params);
    result.row.split = split;
    result.row.stable = run.stable;
    result.row.e = romeval::relative_error(lifted, reference.states);
    result.truncated = !run.stable;
    if (s.def.burgers) {
        const auto diag = romeval::energy_violation(lifted, s.grid1());
        result.row.energy_drift = diag.max_relative_drift();
        result.drift_after_train = diag.max_relative_drift_after(reference.times, s.def.t_train);
    }
    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

inline void save_case_json(const PipelineState& s, const CaseResult& c, Index case_index) {
    std::filesystem::create_directories(s.out + "/runs");
    nlohmann::json j;
    j["experiment"] = c.row.experiment;
    j["family"] = c.row.family;
    j["K"] = c.row.K;
    j["mu"] = c.row.mu;
    j["split"] = c.row.split;
    j["e"] = c.row.e;
    j["stable"] = c.row.stable;
    j["truncated"] = c.truncated;
    if (c.row.energy_drift) {
        j["energy_drift"] = *c.row.energy_drift;
        j["energy_drift_after_train"] = c.drift_after_train;
    }
    j["wall_time_s"] = c.wall_time_s;  // informational; excluded from results.csv
    auto os = io::open_out(s.out + "/runs/" + s.model_tag(c.row.family, c.row.K) + "_" +
                           c.row.split + std::to_string(case_index) + ".json");
    os << j.dump(2) << "\n";
}

}  // namespace detail

/// Evaluates one fitted (family, K) item against every reference trajectory.
inline std::vector<CaseResult> stage_eval_one(const PipelineState& s, const FittedModel& fitted) {
    const Mat vk = s.basis.V.leftCols(fitted.k);
    std::vector<CaseResult> cases;
    const std::string repro_split = s.def.t_train + 1e-12 >= s.def.t_eval ? "train" : "test";
    for (const auto& traj : s.train_trajs)
        cases.push_back(detail::evaluate_case(s, fitted, vk, traj, repro_split));
    for (const auto& traj : s.test_trajs)
        cases.push_back(detail::evaluate_case(s, fitted, vk, traj, "test"));
    for (std::size_t i = 0; i < cases.size(); ++i)
        detail::save_case_json(s, cases[i], static_cast<Index>(i));
    return cases;
}

// --- results and metadata ---------------------------------------------------

inline void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io::FileError("cannot write " + path);
    os << "experiment,family,K,mu,split,e,stable,energy_drift\n";
    for (const auto& r : rows) {
        os << r.experiment << ',' << r.family << ',' << r.K << ',' << r.mu << ',' << r.split << ','
           << io::format_double(r.e) << ',' << (r.stable ? 1 : 0) << ','
           << (r.energy_drift ? io::format_double(*r.energy_drift) : std::string()) << "\n";
    }
}

inline void write_metadata(const PipelineState& s) {
    nlohmann::json j;
    j["config"] = config_to_json(s.cfg);
    j["config_hash"] = PipelineError::to_hex(config_hash(s.cfg));
    j["version"] = "0.1.0";
    j["experiment"] = {{"id", s.def.id},
                       {"burgers", s.def.burgers},
                       {"dt", s.def.dt},
                       {"t_train", s.def.t_train},
                       {"t_eval", s.def.t_eval},
                       {"cells", s.def.cells},
                       {"nx", s.def.nx},
                       {"ny", s.def.ny},
                       {"dims", s.def.dims},
                       {"families", s.def.families}};
    if (s.def.parametric()) {
        j["experiment"]["k1_lattice"] = s.def.k1_lattice;
        j["experiment"]["tc_lattice"] = s.def.tc_lattice;
        j["experiment"]["n_test_draws"] = s.def.n_test_draws;
        j["experiment"]["test_draw_box"] = "training lattice box";
    }
    std::vector<Index> counts;
    for (const auto& t : s.train_trajs) counts.push_back(s.train_cols(t));
    j["training_snapshot_columns"] = counts;
    j["conventions"] = {
        {"burgers_flux", "skew-symmetric split (u_j^2 + u_j u_j+1 + u_j+1^2)/6"},
        {"initial_sampling", "grid nodes x_j = j dx"},
        {"velocity_data", "exact rhs recorded by the solver at every stored step"},
        {"heat_bc", "strong Dirichlet rows (zero rhs on the boundary)"},
        {"cn_solver", "Picard with lagged diffusivity, update tol 1e-10, max 100 iterations"},
        {"rom_integrator", "rk4 at the FOM time step"},
        {"divergence_threshold", "state norm > 1e6 * max(initial norm, 1) or non-finite"},
        {"adam", "beta1=0.9, beta2=0.999, eps=1e-8"},
        {"wolfe", "c1=1e-4, c2=0.9"},
        {"normalization", "max-abs per variable group, fit on each member's training split"},
        {"checkpoint", "lowest validation loss"},
    };
    auto os = io::open_out(s.out + "/metadata.json");
    os << j.dump(2) << "\n";
}

// --- orchestration ----------------------------------------------------------

inline PipelineState make_state(const ExperimentConfig& cfg, const std::string& out_dir) {
    PipelineState s;
    s.cfg = cfg;
    s.def = cfg.resolved();
    s.out = !out_dir.empty() ? out_dir : cfg.output_dir;
    if (s.out.empty()) throw ConfigError("no output directory (config \"output\" or --out)");
    std::filesystem::create_directories(s.out);
    return s;
}

template <typename F>
auto guarded_stage(const PipelineState& s, const std::string& name, F&& body) {
    try {
        return body();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(name, config_hash(s.cfg), e.what());
    }
}

/// Full pipeline: simulate -> reduce -> fit/train -> evaluate -> export.
/// (family, K) work items run on `jobs` workers; rows are assembled in
/// deterministic (family order, K ascending, trajectory index) order.
inline RunOutput run(const ExperimentConfig& cfg, const std::string& out_dir = "", Index jobs = 1) {
    PipelineState s = make_state(cfg, out_dir);
    guarded_stage(s, "simulate", [&] { stage_simulate(s); return 0; });
    guarded_stage(s, "reduce", [&] {
        if (!s.def.families.empty() && !s.def.dims.empty()) stage_reduce(s);
        return 0;
    });

    struct WorkItem {
        std::string family;
        Index k;
        std::vector<CaseResult> cases;
    };
    std::vector<WorkItem> items;
    std::vector<Index> dims_sorted = s.def.dims;
    std::sort(dims_sorted.begin(), dims_sorted.end());
    for (const auto& family : s.def.families)
        for (Index k : dims_sorted) items.push_back({family, k, {}});

    guarded_stage(s, "fit-evaluate", [&] {
        detail::for_each_parallel(static_cast<Index>(items.size()), jobs, [&](Index i) {
            auto& item = items[static_cast<std::size_t>(i)];
            const FittedModel fitted = stage_fit_one(s, item.family, item.k);
            item.cases = stage_eval_one(s, fitted);
        });
        return 0;
    });

    RunOutput output;
    for (auto& item : items)
        for (auto& c : item.cases) {
            output.rows.push_back(c.row);
            output.cases.push_back(std::move(c));
        }
    guarded_stage(s, "export", [&] {
        output.results_path = s.out + "/results.csv";
        write_results_csv(output.rows, output.results_path);
        write_metadata(s);
        return 0;
    });
    return output;
}

/// Stage-wise entry points backing the simulate/reduce/train/evaluate
/// subcommands; each reads its inputs from the artifacts of the previous one.
inline void run_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    PipelineState s = make_state(cfg, out_dir);
    guarded_stage(s, "simulate", [&] { stage_simulate(s); return 0; });
    guarded_stage(s, "export", [&] { write_metadata(s); return 0; });
}

inline void run_reduce(const ExperimentConfig& cfg, const std::string& out_dir) {
    PipelineState s = make_state(cfg, out_dir);
    guarded_stage(s, "reduce", [&] {
        load_trajectories(s);
        stage_reduce(s);
        return 0;
    });
}

inline void run_train(const ExperimentConfig& cfg, const std::string& out_dir, Index jobs = 1) {
    PipelineState s = make_state(cfg, out_dir);
    guarded_stage(s, "train", [&] {
        load_trajectories(s);
        load_pod(s);
        std::vector<std::pair<std::string, Index>> items;
        for (const auto& family : s.def.families)
            for (Index k : s.def.dims) items.emplace_back(family, k);
        detail::for_each_parallel(static_cast<Index>(items.size()), jobs, [&](Index i) {
            stage_fit_one(s, items[static_cast<std::size_t>(i)].first,
                          items[static_cast<std::size_t>(i)].second);
        });
        return 0;
    });
}

inline RunOutput run_evaluate(const ExperimentConfig& cfg, const std::string& out_dir,
                              Index jobs = 1) {
    PipelineState s = make_state(cfg, out_dir);
    RunOutput output;
    guarded_stage(s, "evaluate", [&] {
        load_trajectories(s);
        load_pod(s);
        struct WorkItem {
            std::string family;
            Index k;
            std::vector<CaseResult> cases;
        };
        std::vector<WorkItem> items;
        std::vector<Index> dims_sorted = s.def.dims;
        std::sort(dims_sorted.begin(), dims_sorted.end());
        for (const auto& family : s.def.families)
            for (Index k : dims_sorted) items.push_back({family, k, {}});
        detail::for_each_parallel(static_cast<Index>(items.size()), jobs, [&](Index i) {
            auto& item = items[static_cast<std::size_t>(i)];
            const FittedModel fitted = load_fitted(s, item.family, item.k);
            item.cases = stage_eval_one(s, fitted);
        });
        for (auto& item : items)
            for (auto& c : item.cases) {
                output.rows.push_back(c.row);
                output.cases.push_back(std::move(c));
            }
        return 0;
    });
    guarded_stage(s, "export", [&] {
        output.results_path = s.out + "/results.csv";
        write_results_csv(output.rows, output.results_path);
        write_metadata(s);
        return 0;
    });
    return output;
}

}  // namespace opinf::pipeline
