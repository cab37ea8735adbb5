#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "damseg/csv.hpp"
#include "damseg/metrics.hpp"
#include "damseg/schedule.hpp"
#include "damseg/seg_model.hpp"

namespace damseg::seg {

/// Adam with bias correction over a fixed list of parameter leaves.
class Adam {
public:
    Adam(std::vector<Tensor> params, double beta1, double beta2, double eps);

    void step(double lr);
    void zero_grad();
    std::size_t steps() const { return t_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    Metrics val;
};

struct RunRecord {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_mean_dice = 0.0;

    /// Header: epoch,lr,train_loss,val_mean_dice,val_dice_c1,...
    CsvTable table() const;
};

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Deterministic 90/10 split; at least one validation sample when n >= 2,
/// and the single sample doubles as validation when n == 1.
DataSplit split_dataset(std::size_t n, std::uint64_t seed);

/// Dice of argmax predictions, averaged over the given samples.
Metrics evaluate(const SegModel& model, std::span<const SyntheticSample> samples,
                 std::span<const std::size_t> indices = {});

struct TrainResult {
    SegModel model;  // parameters from the best validation epoch
    RunRecord record;
};

/// Minimizes segmentation_loss with Adam under lr_at, keeping the best
/// validation parameters and stopping after `patience` epochs without a
/// strict improvement. Throws ParameterError on an empty dataset.
TrainResult train(const SegConfig& seg_config, const TrainConfig& train_config,
                  std::span<const SyntheticSample> dataset, std::uint64_t seed);

}  // namespace damseg::seg
