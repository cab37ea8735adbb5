#include "damseg/metrics.hpp"

#include <string>

#include "damseg/errors.hpp"

namespace damseg::seg {

double dice(std::span<const int> pred, std::span<const int> truth, int class_id) {
    if (pred.size() != truth.size()) {
        throw DimensionError("dice: masks of " + std::to_string(pred.size()) + " and " +
                             std::to_string(truth.size()) + " pixels");
    }
    if (class_id < 0) throw ParameterError("dice: unknown class " + std::to_string(class_id));
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool in_a = pred[i] == class_id;
        const bool in_b = truth[i] == class_id;
        a += in_a;
        b += in_b;
        both += in_a && in_b;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

Metrics evaluate_masks(std::span<const int> pred, std::span<const int> truth, std::size_t classes) {
    if (classes < 2) throw ParameterError("evaluate_masks: need at least 2 classes");
    Metrics m;
    for (std::size_t c = 1; c < classes; ++c) {
        m.class_dice.push_back(dice(pred, truth, static_cast<int>(c)));
        m.mean_dice += m.class_dice.back();
    }
    m.mean_dice /= static_cast<double>(classes - 1);
    return m;
}

Metrics average_metrics(std::span<const Metrics> per_sample) {
    Metrics avg;
    if (per_sample.empty()) return avg;
    avg.class_dice.assign(per_sample.front().class_dice.size(), 0.0);
    for (const auto& m : per_sample) {
        for (std::size_t c = 0; c < avg.class_dice.size(); ++c) avg.class_dice[c] += m.class_dice[c];
        avg.mean_dice += m.mean_dice;
    }
    const double n = static_cast<double>(per_sample.size());
    for (auto& v : avg.class_dice) v /= n;
    avg.mean_dice /= n;
    return avg;
}

}  // namespace damseg::seg
