#pragma once

#include <cstdint>

#include "opinf/common.hpp"

namespace opinf::train {

/// Hybrid L-BFGS/ADAM training configuration. Defaults follow the reference
/// experiment settings: 10000 epochs, batch 50, lr 5e-3 decayed by 0.9998 per
/// epoch, l2 penalty 1e-6, 50 L-BFGS steps triggered every 5000 epochs, and
/// two-member ensembles.
struct TrainingSettings {
    Index epochs = 10000;
    Index batch_size = 50;
    double learning_rate = 5e-3;
    double lr_decay = 0.9998;
    double weight_decay = 1e-6;
    Index lbfgs_every = 5000;  // trigger frequency n_f (epoch % n_f == 0)
    Index lbfgs_steps = 50;
    Index lbfgs_history = 10;
    Index ensemble = 2;
    std::uint64_t seed = 0;

    void validate() const {
        require(epochs >= 0, "TrainingSettings: epochs must be >= 0");
        require(batch_size >= 1 && lbfgs_every >= 1 && lbfgs_steps >= 1 && lbfgs_history >= 1 &&
                    ensemble >= 1,
                "TrainingSettings: counts must be >= 1");
        require(learning_rate > 0.0, "TrainingSettings: learning rate must be positive");
        require(lr_decay > 0.0 && lr_decay <= 1.0, "TrainingSettings: decay must be in (0, 1]");
        require(weight_decay >= 0.0, "TrainingSettings: weight decay must be >= 0");
    }

    /// lr0 * decay^n; exact contract used by the scheduler and its tests.
    double lr_at_epoch(Index epoch) const {
        return learning_rate * std::pow(lr_decay, static_cast<double>(epoch));
    }
};

}  // namespace opinf::train
