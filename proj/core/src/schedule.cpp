#include "damseg/schedule.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "damseg/errors.hpp"

namespace damseg::seg {

void TrainConfig::validate() const {
    if (!(warmup_lr > 0.0 && warmup_lr <= min_lr && min_lr <= lr)) {
        throw ParameterError("TrainConfig: need 0 < warmup_lr <= min_lr <= lr");
    }
    if (epochs == 0 || patience > epochs) throw ParameterError("TrainConfig: need 1 <= epochs and patience <= epochs");
    if (warmup_epochs >= epochs) throw ParameterError("TrainConfig: warmup_epochs must be < epochs");
    if (batch == 0) throw ParameterError("TrainConfig: batch must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
        throw ParameterError("TrainConfig: invalid Adam coefficients");
    }
}

double lr_at(const TrainConfig& c, std::size_t epoch) {
    if (epoch >= c.epochs) {
        throw ParameterError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(c.epochs) + ")");
    }
    if (epoch < c.warmup_epochs) {
        const double t = static_cast<double>(epoch) / static_cast<double>(c.warmup_epochs);
        return c.warmup_lr + (c.lr - c.warmup_lr) * t;
    }
    const std::size_t decay_span = c.epochs - 1 - c.warmup_epochs;
    if (decay_span == 0) return c.lr;
    const double t = static_cast<double>(epoch - c.warmup_epochs) / static_cast<double>(decay_span);
    return c.min_lr + (c.lr - c.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

}  // namespace damseg::seg
