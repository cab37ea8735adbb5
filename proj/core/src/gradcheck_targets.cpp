#include "damseg/gradcheck_targets.hpp"

#include <algorithm>

#include "damseg/errors.hpp"
#include "damseg/grad_check.hpp"
#include "damseg/modern_hopfield.hpp"
#include "damseg/rng.hpp"
#include "damseg/seg_model.hpp"
#include "damseg/static_memory.hpp"

namespace damseg {

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_mut()) v = rng.normal(0.0, stddev);
    return t;
}

// Weighted sum so that every output entry carries a distinct sensitivity.
Tensor weighted(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

double check_matmul(Rng& rng, double eps) {
    const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng), w = random_tensor({3, 2}, rng);
    return std::max(grad_check([&](const Tensor& x) { return weighted(matmul(x, b), w); }, a, eps),
                    grad_check([&](const Tensor& x) { return weighted(matmul(a, x), w); }, b, eps));
}

double check_softmax(Rng& rng, double eps) {
    const Tensor a = random_tensor({3, 3}, rng), b = random_tensor({3, 3}, rng), w = random_tensor({3, 3}, rng);
    return grad_check([&](const Tensor& x) { return weighted(softmax_rows(matmul(x, b)), w); }, a, eps);
}

double check_energy(Rng& rng, double eps) {
    const std::size_t d = 8, n = 5;
    const modern::ContinuousStore store(random_tensor({d, n}, rng), rng.uniform(0.5, 2.0));
    const Tensor xi = random_tensor({d}, rng);
    return grad_check([&](const Tensor& x) { return modern::energy_continuous(store, x); }, xi, eps);
}

double check_dam(Rng& rng, double eps) {
    const std::size_t m = 4, d = 8, t = 3;
    const Tensor xi = random_tensor({m, d}, rng, 0.5);
    const Tensor wk = random_tensor({d, d}, rng, 0.5);
    const Tensor q = random_tensor({t, d}, rng);
    const Tensor w = random_tensor({t, d}, rng);
    const auto f_q = [&](const Tensor& x) { return weighted(memory::dam_forward({xi, wk}, x), w); };
    const auto f_xi = [&](const Tensor& x) { return weighted(memory::dam_forward({x, wk}, q), w); };
    const auto f_wk = [&](const Tensor& x) { return weighted(memory::dam_forward({xi, x}, q), w); };
    return std::max({grad_check(f_q, q, eps), grad_check(f_xi, xi, eps), grad_check(f_wk, wk, eps)});
}

double check_seg(Rng& rng, std::uint64_t seed, double eps) {
    seg::SegConfig cfg;
    cfg.image_size = 8;
    cfg.patch_size = 4;
    cfg.embed_dim = 8;
    cfg.blocks = 2;
    cfg.heads = 2;
    cfg.memory_slots = 3;
    cfg.use_memory = true;
    seg::SegModel model = seg::init_model(cfg, seed);
    const auto data = seg::generate_dataset(2, 0.3, split_seed(seed, 5), cfg.image_size);
    const seg::SyntheticSample* batch[] = {&data[0], &data[1]};
    const Tensor images = seg::stack_images(batch);
    std::vector<int> labels;
    for (const auto& s : data) labels.insert(labels.end(), s.mask.begin(), s.mask.end());

    std::vector<Tensor> params = model.trainable();
    std::vector<ParamEntry> entries;
    for (int k = 0; k < 32; ++k) {
        const std::size_t t = rng.index(params.size());
        entries.push_back({t, rng.index(params[t].size())});
    }
    const auto loss = [&] { return seg::segmentation_loss(seg::forward_logits(model, images), labels, cfg.classes); };
    return grad_check_entries(loss, params, entries, eps);
}

}  // namespace

const std::vector<std::string>& gradcheck_targets() {
    static const std::vector<std::string> names = {"matmul", "softmax_rows", "energy_continuous", "dam_forward",
                                                   "seg_loss"};
    return names;
}

GradCheckReport run_gradcheck(std::string_view target, std::uint64_t seed, double eps) {
    Rng rng(split_seed(seed, 42));
    GradCheckReport report{std::string(target), 0.0, 1e-5};
    if (target == "matmul") {
        report.max_rel_err = check_matmul(rng, eps);
    } else if (target == "softmax_rows") {
        report.max_rel_err = check_softmax(rng, eps);
    } else if (target == "energy_continuous") {
        report.max_rel_err = check_energy(rng, eps);
    } else if (target == "dam_forward") {
        report.max_rel_err = check_dam(rng, eps);
    } else if (target == "seg_loss") {
        report.tolerance = 1e-4;
        report.max_rel_err = check_seg(rng, seed, eps);
    } else {
        throw ParameterError("unknown gradcheck target '" + std::string(target) + "'");
    }
    return report;
}

}  // namespace damseg
