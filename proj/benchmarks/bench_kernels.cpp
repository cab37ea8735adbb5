#include <benchmark/benchmark.h>

#include "damseg/dense_associative.hpp"
#include "damseg/modern_hopfield.hpp"
#include "damseg/rng.hpp"
#include "damseg/seg_model.hpp"
#include "damseg/static_memory.hpp"
#include "damseg/tensor.hpp"

using namespace damseg;

namespace {

Tensor filled(Shape shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_mut()) v = rng.normal();
    return t;
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    auto a = filled({n, n}, rng), b = filled({n, n}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}
BENCHMARK(BM_Matmul)->RangeMultiplier(2)->Range(16, 256);

void BM_MatmulBackward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    auto a = filled({n, n}, rng), b = filled({n, n}, rng);
    a.set_requires_grad(true);
    for (auto _ : state) {
        a.zero_grad();
        backward(sum(matmul(a, b)));
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(64)->Arg(128);

void BM_DamForward(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    auto mem = memory::init_static_memory(m, 64, 3);
    Rng rng(3);
    auto q = filled({64, 64}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(memory::dam_forward(mem, q));
}
BENCHMARK(BM_DamForward)->Arg(8)->Arg(64)->Arg(512);

void BM_DamSweep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(4);
    dense::DamConfig cfg(state.range(1) ? dense::Interaction::exponential() : dense::Interaction::polynomial(3),
                         hopfield::PatternStore::random(n / 4, n, rng));
    auto probe = hopfield::BipolarState::random(n, rng);
    auto order = rng.permutation(n);
    for (auto _ : state) benchmark::DoNotOptimize(dense::update_dam(cfg, probe, order));
}
BENCHMARK(BM_DamSweep)->Args({64, 0})->Args({64, 1})->Args({256, 0})->Args({256, 1});

void BM_ContinuousUpdate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(5);
    modern::ContinuousStore store(filled({64, n}, rng), 1.0);
    modern::QueryState q{store.column(0)};
    for (auto _ : state) benchmark::DoNotOptimize(modern::update_continuous(store, q));
}
BENCHMARK(BM_ContinuousUpdate)->Arg(16)->Arg(256);

void BM_SegForward(benchmark::State& state) {
    seg::SegConfig cfg;
    cfg.use_memory = state.range(0) != 0;
    auto model = seg::init_model(cfg, 6).frozen();
    auto data = seg::generate_dataset(8, 0.0, 6);
    std::vector<const seg::SyntheticSample*> ptrs;
    for (const auto& s : data) ptrs.push_back(&s);
    auto images = seg::stack_images(ptrs);
    for (auto _ : state) benchmark::DoNotOptimize(seg::forward_logits(model, images));
}
BENCHMARK(BM_SegForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
