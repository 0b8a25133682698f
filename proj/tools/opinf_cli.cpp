// Command-line front end for the operator-inference experiment pipeline.
//
// Subcommands: simulate, reduce, train, evaluate, run, cost, list.
// Exit codes: 0 success, 2 config error, 3 pipeline-stage failure.

#include <CLI11.hpp>
#include <iostream>

#include "opinf/cost/costmodel.hpp"
#include "opinf/pipeline/pipeline.hpp"

namespace {

opinf::pipeline::ExperimentConfig load_config(const std::string& path, std::uint64_t seed_override,
                                              bool has_seed) {
    auto is = opinf::io::open_in(path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw opinf::pipeline::ConfigError(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    auto cfg = opinf::pipeline::parse_config(j);
    if (has_seed) cfg.seed = seed_override;
    return cfg;
}

std::vector<opinf::cost::EvalKind> all_eval_kinds() {
    using K = opinf::cost::EvalKind;
    return {K::Linear,      K::Quadratic,     K::SpsdApply,   K::SkewApply,
            K::NnOpinfStandard, K::NnOpinfMatrix, K::NnOpinfSpsd, K::NnOpinfSkew,
            K::SpsdPotential};
}

void emit_cost_table(std::ostream& os, opinf::Index k_min, opinf::Index k_max) {
    std::vector<opinf::Index> ks;
    for (opinf::Index k = k_min; k <= k_max; k *= 2) ks.push_back(k);
    opinf::cost::save_ratio_table(opinf::cost::ratio_table(all_eval_kinds(), ks), os);
}

void print_catalog(std::ostream& os) {
    for (const auto& e : opinf::pipeline::list_experiments()) {
        os << e.id << "\n  " << e.description << "\n";
        if (e.burgers)
            os << "  grid: " << e.cells << " cells on [0, 2*pi), dt=" << e.dt << "\n";
        else
            os << "  grid: " << e.nx << "x" << e.ny << " intervals on [0,1]^2, dt=" << e.dt << "\n";
        os << "  train window: [0, " << e.t_train << "], eval window: [0, " << e.t_eval << "]\n";
        os << "  default dims:";
        for (auto k : e.dims) os << " " << k;
        os << "\n  default families:";
        for (const auto& f : e.families) os << " " << f;
        os << "\n";
        if (e.parametric()) {
            os << "  training lattice: k1 in {";
            for (std::size_t i = 0; i < e.k1_lattice.size(); ++i)
                os << (i ? "," : "") << e.k1_lattice[i];
            os << "}, Tc in {";
            for (std::size_t i = 0; i < e.tc_lattice.size(); ++i)
                os << (i ? "," : "") << e.tc_lattice[i];
            os << "}; " << e.n_test_draws << " seeded test draws\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure-preserving operator inference toolkit"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    opinf::Index jobs = 1;
    bool cost_flag = false;

    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--out", out_dir, "output directory (overrides config \"output\")");
    app.add_option("--seed", seed, "seed override")->each([&](const std::string&) { has_seed = true; });
    app.add_option("--jobs", jobs, "worker count for (family, K) items");
    app.add_flag("--cost", cost_flag, "emit the operator cost-ratio table as CSV and exit");

    auto* sim = app.add_subcommand("simulate", "run the full-order solver and store trajectories");
    auto* red = app.add_subcommand("reduce", "build the POD basis from stored trajectories");
    auto* trn = app.add_subcommand("train", "fit/train all configured models from stored artifacts");
    auto* evl = app.add_subcommand("evaluate", "integrate stored models and export results.csv");
    auto* runc = app.add_subcommand("run", "full pipeline: simulate, reduce, train, evaluate");
    auto* cst = app.add_subcommand("cost", "emit the operator cost-ratio table as CSV");
    auto* lst = app.add_subcommand("list", "list experiments and their defaults");

    opinf::Index k_min = 2, k_max = 128;
    std::string cost_out;
    cst->add_option("--k-min", k_min, "smallest K (doubling grid)");
    cst->add_option("--k-max", k_max, "largest K");
    cst->add_option("--out-file", cost_out, "CSV destination (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cost_flag || cst->parsed()) {
            if (!cost_out.empty()) {
                std::ofstream os(cost_out);
                if (!os) throw opinf::io::FileError("cannot write " + cost_out);
                emit_cost_table(os, k_min, k_max);
            } else {
                emit_cost_table(std::cout, k_min, k_max);
            }
            return 0;
        }
        if (lst->parsed()) {
            print_catalog(std::cout);
            return 0;
        }
        if (!sim->parsed() && !red->parsed() && !trn->parsed() && !evl->parsed() &&
            !runc->parsed()) {
            std::cout << app.help();
            return 0;
        }

        if (config_path.empty())
            throw opinf::pipeline::ConfigError("--config is required for this subcommand");
        const auto cfg = load_config(config_path, seed, has_seed);

        if (sim->parsed()) {
            opinf::pipeline::run_simulate(cfg, out_dir);
        } else if (red->parsed()) {
            opinf::pipeline::run_reduce(cfg, out_dir);
        } else if (trn->parsed()) {
            opinf::pipeline::run_train(cfg, out_dir, jobs);
        } else if (evl->parsed()) {
            const auto out = opinf::pipeline::run_evaluate(cfg, out_dir, jobs);
            std::cout << "wrote " << out.results_path << " (" << out.rows.size() << " rows)\n";
        } else {
            const auto out = opinf::pipeline::run(cfg, out_dir, jobs);
            std::cout << "wrote " << out.results_path << " (" << out.rows.size() << " rows)\n";
        }
        return 0;
    } catch (const opinf::pipeline::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const opinf::pipeline::PipelineError& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
