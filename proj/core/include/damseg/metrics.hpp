#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace damseg::seg {

/// 2|A n B| / (|A| + |B|) for the pixels labelled class_id; 1.0 when both
/// masks lack the class. Throws DimensionError on a size mismatch and
/// ParameterError for a negative class.
double dice(std::span<const int> pred, std::span<const int> truth, int class_id);

struct Metrics {
    std::vector<double> class_dice;  // foreground classes 1..C-1
    double mean_dice = 0.0;
};

/// Dice for every foreground class of one prediction.
Metrics evaluate_masks(std::span<const int> pred, std::span<const int> truth, std::size_t classes);

/// Averages per-sample metrics class by class, in index order.
Metrics average_metrics(std::span<const Metrics> per_sample);

}  // namespace damseg::seg
