#include "damseg/ablation.hpp"

#include <algorithm>

#include "damseg/errors.hpp"
#include "damseg/rng.hpp"
#include "damseg/synthetic_data.hpp"
#include "damseg/training.hpp"

namespace damseg::seg {

std::vector<AblationRun> ablate(const SegConfig& seg_config, const TrainConfig& train_config,
                                const AblationSettings& settings) {
    if (settings.seeds.size() < 3) throw ParameterError("ablate: at least 3 seeds are required");
    if (settings.occlusion_levels.empty()) throw ParameterError("ablate: no occlusion levels");
    if (settings.train_samples == 0 || settings.test_samples == 0) {
        throw ParameterError("ablate: sample counts must be >= 1");
    }
    std::vector<AblationRun> runs;
    for (double level : settings.occlusion_levels) {
        for (auto seed : settings.seeds) {
            const auto data = generate_dataset(settings.train_samples, level, seed, seg_config.image_size);
            const auto test =
                generate_dataset(settings.test_samples, level, split_seed(seed, 99), seg_config.image_size);
            for (bool memory_on : {true, false}) {
                SegConfig cfg = seg_config;
                cfg.use_memory = memory_on;
                const auto result = train(cfg, train_config, data, seed);
                runs.push_back({level, seed, memory_on, evaluate(result.model, test)});
            }
        }
    }
    return runs;
}

CsvTable ablation_table(const std::vector<AblationRun>& runs) {
    CsvTable t;
    t.header = {"occlusion", "seed", "use_memory"};
    const std::size_t classes = runs.empty() ? 3 : runs.front().test.class_dice.size();
    for (std::size_t c = 1; c <= classes; ++c) t.header.push_back("dice_c" + std::to_string(c));
    t.header.push_back("mean_dice");
    for (const auto& r : runs) {
        std::vector<std::string> row = {format_number(r.occlusion), std::to_string(r.seed), r.use_memory ? "1" : "0"};
        for (double d : r.test.class_dice) row.push_back(format_number(d));
        row.push_back(format_number(r.test.mean_dice));
        t.add_row(std::move(row));
    }
    return t;
}

std::vector<AblationDelta> summarize(const std::vector<AblationRun>& runs) {
    std::vector<AblationDelta> out;
    for (const auto& r : runs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const AblationDelta& d) { return d.occlusion == r.occlusion; });
        if (it == out.end()) {
            AblationDelta d;
            d.occlusion = r.occlusion;
            d.class_dice_on.assign(r.test.class_dice.size(), 0.0);
            d.class_dice_off.assign(r.test.class_dice.size(), 0.0);
            out.push_back(d);
            it = out.end() - 1;
        }
        auto& target = r.use_memory ? it->class_dice_on : it->class_dice_off;
        for (std::size_t c = 0; c < target.size(); ++c) target[c] += r.test.class_dice[c];
        (r.use_memory ? it->mean_on : it->mean_off) += r.test.mean_dice;
    }
    for (auto& d : out) {
        std::size_t seeds = 0;
        for (const auto& r : runs) seeds += (r.occlusion == d.occlusion && r.use_memory);
        const double n = static_cast<double>(std::max<std::size_t>(seeds, 1));
        for (auto& v : d.class_dice_on) v /= n;
        for (auto& v : d.class_dice_off) v /= n;
        d.mean_on /= n;
        d.mean_off /= n;
    }
    return out;
}

}  // namespace damseg::seg
