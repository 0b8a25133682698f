#pragma once

#include <fstream>
#include <string>

#include "opinf/train/adam.hpp"
#include "opinf/train/lbfgs.hpp"
#include "opinf/train/loss.hpp"
#include "opinf/train/settings.hpp"

namespace opinf::train {

struct HistoryRow {
    Index epoch;
    double train_loss;
    double val_loss;
    double lr;
    std::string phase;  // "adam" | "lbfgs"
};

struct TrainResult {
    ops::RomModel model;  // checkpoint with the lowest validation loss
    std::vector<HistoryRow> history;
    double best_val_loss = 0.0;
    Index best_epoch = -1;
    bool aborted = false;           // non-finite loss encountered
    Index rejected_adam_steps = 0;  // non-finite gradients
};

inline void save_history(const std::vector<HistoryRow>& history, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io::FileError("cannot write history to " + path);
    os << "epoch,train_loss,val_loss,lr,phase\n";
    for (const auto& row : history)
        os << row.epoch << ',' << io::format_double(row.train_loss) << ','
           << io::format_double(row.val_loss) << ',' << io::format_double(row.lr) << ','
           << row.phase << "\n";
}

/// Hybrid training loop: for epoch = 0..epochs-1, run `lbfgs_steps` L-BFGS
/// iterations on the full training batch whenever epoch % lbfgs_every == 0,
/// then one ADAM epoch over reshuffled minibatches with stepwise-decayed
/// learning rate. Returns the checkpoint with the lowest validation loss.
/// Deterministic for fixed (seed, settings, dataset).
inline TrainResult train(ops::RomModel model, const reduction::ReducedDataset& ds,
                         const reduction::SplitIndices& split, const TrainingSettings& settings) {
    settings.validate();
    model.validate();
    ds.validate();
    require(!split.train.empty() && !split.validation.empty(), "train: split not prepared");

    TrainResult result;
    result.model = model;
    if (settings.epochs == 0) return result;

    Vec params = model.get_params();
    AdamState adam(params.size());
    const double wd = settings.weight_decay;

    // Extreme line-search trials can overflow a network; score them +inf so
    // the search backtracks instead of aborting the run.
    Objective full_batch = [&](const Vec& p, Vec& grad) {
        try {
            model.set_params(p);
            LossResult lr = loss(model, ds, split.train, wd);
            grad = std::move(lr.grad);
            return lr.value;
        } catch (const IntegrationError&) {
            grad = Vec::Zero(p.size());
            return std::numeric_limits<double>::infinity();
        }
    };

    double best_val = std::numeric_limits<double>::infinity();
    auto record = [&](Index epoch, double train_loss, const std::string& phase) {
        model.set_params(params);
        double val;
        try {
            val = loss_value(model, ds, split.validation, wd);
        } catch (const IntegrationError&) {
            val = std::numeric_limits<double>::infinity();
        }
        result.history.push_back({epoch, train_loss, val, settings.lr_at_epoch(epoch), phase});
        if (val < best_val) {
            best_val = val;
            result.model = model;
            result.best_epoch = epoch;
            result.best_val_loss = val;
        }
        return std::isfinite(val) && std::isfinite(train_loss);
    };

    std::vector<Index> order = split.train;
    for (Index epoch = 0; epoch < settings.epochs; ++epoch) {
        if (epoch % settings.lbfgs_every == 0) {
            LbfgsOptions opt;
            opt.max_iters = settings.lbfgs_steps;
            opt.history = settings.lbfgs_history;
            LbfgsReport rep = lbfgs_run(params, full_batch, opt);
            if (!record(epoch, rep.final_loss, "lbfgs")) {
                result.aborted = true;
                return result;
            }
        }

        Rng shuffle_rng(mix64(mix64(settings.seed, 0x65706f6368ULL), static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);
        const double lr = settings.lr_at_epoch(epoch);
        double batch_loss_sum = 0.0;
        Index batches = 0;
        for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(settings.batch_size)) {
            const auto end = std::min(order.size(), at + static_cast<std::size_t>(settings.batch_size));
            const std::vector<Index> batch(order.begin() + static_cast<std::ptrdiff_t>(at),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
            model.set_params(params);
            try {
                LossResult l = loss(model, ds, batch, wd);
                batch_loss_sum += l.value;
                ++batches;
                if (!adam_step(adam, params, l.grad, lr)) ++result.rejected_adam_steps;
            } catch (const IntegrationError&) {
                batch_loss_sum += std::numeric_limits<double>::infinity();
                ++batches;
                ++result.rejected_adam_steps;
            }
        }
        if (!record(epoch, batch_loss_sum / static_cast<double>(batches), "adam")) {
            result.aborted = true;
            return result;
        }
    }
    return result;
}

struct EnsembleTrainResult {
    ops::EnsembleModel ensemble;
    std::vector<TrainResult> members;
};

/// Trains L members independently with seeds seed+0..L-1; each member draws
/// its own train/validation split (and hence its own max-abs scales).
/// `build_member(seed, dataset)` must return a freshly initialized model with
/// the dataset's scales attached.
template <typename Builder>
EnsembleTrainResult train_ensemble(Builder&& build_member, const Mat& states_raw,
                                   const Mat& velocities_raw, const Mat& params_raw,
                                   const TrainingSettings& settings) {
    settings.validate();
    EnsembleTrainResult result;
    for (Index m = 0; m < settings.ensemble; ++m) {
        const std::uint64_t member_seed = settings.seed + static_cast<std::uint64_t>(m);
        const auto split = reduction::split(states_raw.cols(), member_seed);
        const auto ds = reduction::make_reduced_dataset(states_raw, velocities_raw, params_raw, split);
        TrainingSettings member_settings = settings;
        member_settings.seed = member_seed;
        TrainResult tr = train(build_member(member_seed, ds), ds, split, member_settings);
        if (tr.aborted)
            throw SolverError("train_ensemble: member " + std::to_string(m) +
                              " aborted on a non-finite loss");
        result.ensemble.members.push_back(tr.model);
        result.ensemble.seeds.push_back(member_seed);
        result.members.push_back(std::move(tr));
    }
    return result;
}

}  // namespace opinf::train
