#pragma once

// Memory on/off comparison across occlusion levels and seeds.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "damseg/csv.hpp"
#include "damseg/metrics.hpp"
#include "damseg/schedule.hpp"
#include "damseg/seg_model.hpp"

namespace damseg::seg {

struct AblationSettings {
    std::vector<double> occlusion_levels;
    std::vector<std::uint64_t> seeds;
    std::size_t train_samples = 256;
    std::size_t test_samples = 64;
};

struct AblationRun {
    double occlusion = 0.0;
    std::uint64_t seed = 0;
    bool use_memory = false;
    Metrics test;
};

/// Trains with and without memory for each (occlusion, seed) pair on
/// generate_dataset(train_samples, occlusion, seed) and scores both on a
/// held-out set drawn from split_seed(seed, 99). Both arms share the same
/// backbone initialization. Throws ParameterError with fewer than 3 seeds.
std::vector<AblationRun> ablate(const SegConfig& seg_config, const TrainConfig& train_config,
                                const AblationSettings& settings);

/// One row per run, 2 * |levels| * |seeds| rows.
/// Header: occlusion,seed,use_memory,dice_c1,...,mean_dice
CsvTable ablation_table(const std::vector<AblationRun>& runs);

struct AblationDelta {
    double occlusion = 0.0;
    std::vector<double> class_dice_on;   // seed-averaged, foreground classes
    std::vector<double> class_dice_off;
    double mean_on = 0.0;
    double mean_off = 0.0;
};

/// Seed-averaged per-class dice for each arm, one entry per occlusion level.
std::vector<AblationDelta> summarize(const std::vector<AblationRun>& runs);

/// Foreground classes the occluder hides most in the synthetic anatomy: the
/// outer wall and the side chamber.
inline const std::vector<int> kOccludedStructureClasses = {kOuterWall, kSideChamber};

}  // namespace damseg::seg
