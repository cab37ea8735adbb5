#pragma once

#include <cstddef>

namespace damseg::seg {

/// Optimizer and schedule recipe. Defaults: Adam(0.9, 0.999), lr 5e-4,
/// warmup from 1e-6 over 10 epochs, cosine decay to 1e-5 at epoch 59 of 60,
/// batch 32, patience 10.
struct TrainConfig {
    double lr = 5e-4;
    double warmup_lr = 1e-6;
    double min_lr = 1e-5;
    std::size_t warmup_epochs = 10;
    std::size_t epochs = 60;
    std::size_t batch = 32;
    std::size_t patience = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Throws ParameterError unless warmup_lr <= min_lr <= lr, patience <=
    /// epochs, warmup_epochs < epochs and batch >= 1.
    void validate() const;
};

/// Linear warmup from warmup_lr (epoch 0) to lr (epoch warmup_epochs), then
/// cosine decay reaching min_lr at the last epoch. Throws ParameterError for
/// epoch >= epochs.
double lr_at(const TrainConfig& config, std::size_t epoch);

}  // namespace damseg::seg
