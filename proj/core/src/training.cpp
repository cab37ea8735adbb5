#include "damseg/training.hpp"

#include <algorithm>
#include <cmath>

#include "damseg/errors.hpp"
#include "damseg/rng.hpp"

namespace damseg::seg {

Adam::Adam(std::vector<Tensor> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Adam::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

void Adam::step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto value = params_[k].data_mut();
        auto grad = params_[k].grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
            value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
    for (const auto& p : params_) {
        for (double x : p.data()) {
            if (!std::isfinite(x)) throw NumericError("Adam: non-finite parameter after step");
        }
    }
}

CsvTable RunRecord::table() const {
    CsvTable t;
    t.header = {"epoch", "lr", "train_loss", "val_mean_dice"};
    const std::size_t classes = epochs.empty() ? 3 : epochs.front().val.class_dice.size();
    for (std::size_t c = 1; c <= classes; ++c) t.header.push_back("val_dice_c" + std::to_string(c));
    for (const auto& e : epochs) {
        std::vector<std::string> row = {std::to_string(e.epoch), format_number(e.lr), format_number(e.train_loss),
                                        format_number(e.val.mean_dice)};
        for (double d : e.val.class_dice) row.push_back(format_number(d));
        t.add_row(std::move(row));
    }
    return t;
}

DataSplit split_dataset(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ParameterError("split_dataset: empty dataset");
    DataSplit split;
    if (n == 1) {
        split.train = split.val = {0};
        return split;
    }
    Rng rng(split_seed(seed, 7));
    auto order = rng.permutation(n);
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n))));
    split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    return split;
}

Metrics evaluate(const SegModel& model, std::span<const SyntheticSample> samples, std::span<const std::size_t> indices) {
    const SegModel frozen = model.frozen();
    std::vector<std::size_t> all;
    if (indices.empty()) {
        all.resize(samples.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        indices = all;
    }
    std::vector<Metrics> per_sample;
    per_sample.reserve(indices.size());
    for (auto i : indices) {
        const auto pred = predict(frozen, samples[i]);
        per_sample.push_back(evaluate_masks(pred, samples[i].mask, frozen.config.classes));
    }
    return average_metrics(per_sample);
}

TrainResult train(const SegConfig& seg_config, const TrainConfig& cfg, std::span<const SyntheticSample> dataset,
                  std::uint64_t seed) {
    if (dataset.empty()) throw ParameterError("train: empty dataset");
    seg_config.validate();
    cfg.validate();

    const DataSplit split = split_dataset(dataset.size(), seed);
    SegModel model = init_model(seg_config, seed);
    Adam adam(model.trainable(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    Rng shuffle_rng(split_seed(seed, 3));

    TrainResult result{model.frozen(), {}};
    double best = -1.0;
    std::size_t stale = 0;
    std::vector<std::size_t> order = split.train;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at(cfg, epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t end = std::min(order.size(), start + cfg.batch);
            std::vector<const SyntheticSample*> batch;
            std::vector<int> labels;
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = dataset[order[i]];
                batch.push_back(&s);
                labels.insert(labels.end(), s.mask.begin(), s.mask.end());
            }
            adam.zero_grad();
            const Tensor loss = segmentation_loss(forward_logits(model, stack_images(batch)), labels,
                                                  seg_config.classes);
            const double value = loss.item();
            if (!std::isfinite(value) || value < 0.0) throw NumericError("train: invalid loss");
            backward(loss);
            adam.step(lr);
            loss_sum += value * static_cast<double>(end - start);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.val = evaluate(model, dataset, split.val);
        result.record.epochs.push_back(rec);

        if (rec.val.mean_dice > best) {
            best = rec.val.mean_dice;
            stale = 0;
            result.model = model.frozen();
            result.record.best_epoch = epoch;
            result.record.best_val_mean_dice = best;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace damseg::seg
