// Acceptance suite: one PASS/FAIL line per criterion.
//
//   damseg_acceptance            run every criterion
//   damseg_acceptance 3 7        run only criteria 3 and 7
//
// Exit status is 0 only if every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "damseg/ablation.hpp"
#include "damseg/classical_hopfield.hpp"
#include "damseg/dense_associative.hpp"
#include "damseg/gradcheck_targets.hpp"
#include "damseg/modern_hopfield.hpp"
#include "damseg/rng.hpp"
#include "damseg/schedule.hpp"
#include "damseg/seg_model.hpp"
#include "damseg/static_memory.hpp"
#include "damseg_cli/commands.hpp"

using namespace damseg;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_seconds;
    std::function<Verdict()> run;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

Tensor random_tensor(Shape shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_mut()) v = rng.normal(0.0, stddev);
    return t;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_bits(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

// 1 ------------------------------------------------------------------------
Verdict quadratic_reduction() {
    // T carries a positive 1/N factor; it cannot change the sign of any local
    // field, so the two rules must agree bit for bit.
    std::size_t mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(split_seed(2024, seed));
        const auto patterns = hopfield::PatternStore::random(4, 24, rng);
        const auto weights = hopfield::store(patterns);
        const dense::DamConfig cfg(dense::Interaction::polynomial(2), patterns);
        auto a = hopfield::BipolarState::random(24, rng);
        auto b = a;
        for (int sweep = 0; sweep < 5; ++sweep) {
            const auto order = rng.permutation(24);
            a = hopfield::update_async(weights, a, order);
            b = dense::update_dam(cfg, b, order);
            if (a != b) {
                ++mismatches;
                break;
            }
        }
    }
    return {mismatches == 0, "100 instances x 5 sweeps, mismatches " + std::to_string(mismatches)};
}

// 2 ------------------------------------------------------------------------
Verdict energy_descent() {
    std::size_t violations[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(split_seed(7, seed));
        const std::size_t n = 16 + rng.index(48);
        const auto patterns = hopfield::PatternStore::random(2 + rng.index(10), n, rng);
        const auto weights = hopfield::store(patterns);
        auto s = hopfield::BipolarState::random(n, rng);
        for (int sweep = 0; sweep < 4; ++sweep) {
            for (auto i : rng.permutation(n)) {
                const double before = hopfield::energy(weights, s);
                hopfield::update_spin(weights, s, i);
                violations[0] += hopfield::energy(weights, s) > before + 1e-12;
            }
        }
    }
    for (const auto& f : {dense::Interaction::polynomial(2), dense::Interaction::polynomial(3),
                          dense::Interaction::polynomial(4), dense::Interaction::exponential()}) {
        const std::size_t slot = f.kind() == dense::Interaction::Kind::exponential ? 2 : 1;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Rng rng(split_seed(8, seed));
            const std::size_t n = 16 + rng.index(48);
            const dense::DamConfig cfg(f, hopfield::PatternStore::random(2 + rng.index(20), n, rng));
            auto s = hopfield::BipolarState::random(n, rng);
            auto m = dense::overlaps(cfg.patterns, s);
            for (int sweep = 0; sweep < 4; ++sweep) {
                for (auto i : rng.permutation(n)) {
                    const double before = dense::energy_dam(cfg, s);
                    dense::update_dam_spin(cfg, s, m, i);
                    const double after = dense::energy_dam(cfg, s);
                    violations[slot] += after > before + 1e-12 * std::abs(before);
                }
            }
        }
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(split_seed(9, seed));
        const std::size_t d = 2 + rng.index(15), n = 1 + rng.index(12);
        const modern::ContinuousStore store(random_tensor({d, n}, rng), std::exp(rng.uniform(-2.0, 3.5)));
        modern::QueryState q{std::vector<double>(d)};
        for (auto& v : q.xi) v = rng.normal(0.0, 2.0);
        double e = modern::energy_continuous(store, q);
        for (int t = 0; t < 20; ++t) {
            q = modern::update_continuous(store, q);
            const double next = modern::energy_continuous(store, q);
            violations[3] += next > e + 1e-9 * std::max(1.0, std::abs(e));
            e = next;
        }
    }
    const bool pass = violations[0] + violations[1] + violations[2] + violations[3] == 0;
    return {pass, "violations classical " + std::to_string(violations[0]) + ", polynomial " +
                      std::to_string(violations[1]) + ", exponential " + std::to_string(violations[2]) +
                      ", continuous " + std::to_string(violations[3])};
}

// 3 ------------------------------------------------------------------------
Verdict capacity_ordering() {
    const std::vector<std::size_t> grid = {1,  2,  3,  4,  5,  6,  7,  8,   10,  12,  14,  16,  20, 24,
                                           28, 32, 40, 48, 56, 64, 80, 96, 128, 160, 192, 256, 384, 512};
    bool pass = true;
    std::string detail;
    for (std::uint64_t master : {1u, 2u, 3u}) {
        std::size_t thresholds[3];
        int idx = 0;
        for (const auto& f :
             {dense::Interaction::polynomial(2), dense::Interaction::polynomial(3), dense::Interaction::exponential()}) {
            dense::CapacitySettings s;
            s.interaction = f;
            s.n = 64;
            s.k_grid = grid;
            s.corruption = 0.1;
            s.trials = 200;
            s.seed = master;
            thresholds[idx++] = dense::capacity_threshold(dense::capacity_experiment(s), 0.9);
        }
        const bool ordered = thresholds[0] <= thresholds[1] && thresholds[1] <= thresholds[2];
        pass = pass && ordered;
        detail += (detail.empty() ? "" : "; ") + std::string("seed ") + std::to_string(master) + ": K(n=2)=" +
                  std::to_string(thresholds[0]) + " K(n=3)=" + std::to_string(thresholds[1]) +
                  " K(exp)=" + std::to_string(thresholds[2]);
    }
    return {pass, detail};
}

// 4 ------------------------------------------------------------------------
Verdict gradient_oracles() {
    double worst_energy = 0.0, worst_dam = 0.0, worst_seg = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        worst_energy = std::max(worst_energy, run_gradcheck("energy_continuous", seed, 1e-6).max_rel_err);
        worst_dam = std::max(worst_dam, run_gradcheck("dam_forward", seed, 1e-6).max_rel_err);
    }
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        worst_seg = std::max(worst_seg, run_gradcheck("seg_loss", seed, 1e-6).max_rel_err);
    }
    const bool pass = worst_energy < 1e-5 && worst_dam < 1e-5 && worst_seg < 1e-4;
    return {pass, "max rel err energy " + fmt(worst_energy) + ", dam_forward (Q, xi, W_k) " + fmt(worst_dam) +
                      ", seg loss " + fmt(worst_seg)};
}

// 5 ------------------------------------------------------------------------
Verdict uhn_equivalence() {
    std::size_t bad_update = 0, bad_static = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(split_seed(55, seed));
        const std::size_t d = 2 + rng.index(14), n = 1 + rng.index(10);
        const double beta = std::exp(rng.uniform(-2.0, 3.0));
        const Tensor x = random_tensor({d, n}, rng);
        const modern::ContinuousStore store(x, beta);
        modern::QueryState q{std::vector<double>(d)};
        for (auto& v : q.xi) v = rng.normal();
        const auto spec = modern::UhnSpec::from_names("dot", "softmax", beta, x);
        bad_update += !same_bits(modern::uhn_retrieve(spec, x, q.xi), modern::update_continuous(store, q).xi);

        const std::size_t dv = 1 + rng.index(6);
        const Tensor keys = random_tensor({n, d}, rng), values = random_tensor({n, dv}, rng);
        const auto composed = modern::UhnSpec::from_names("dot", "softmax", 1.0 / std::sqrt(static_cast<double>(d)),
                                                          transpose(values).detach());
        bad_static += !same_bits(modern::retrieve_static_query(q, keys, values),
                                 modern::uhn_retrieve(composed, transpose(keys).detach(), q.xi));
    }
    return {bad_update == 0 && bad_static == 0, "50 seeds, mismatches update " + std::to_string(bad_update) +
                                                    ", static query " + std::to_string(bad_static)};
}

// 6 ------------------------------------------------------------------------
Verdict single_pattern_identity() {
    double worst = 0.0;
    Rng rng(66);
    for (double beta : {0.1, 1.0, 10.0}) {
        for (int i = 0; i < 20; ++i) {
            const modern::ContinuousStore store(random_tensor({1 + rng.index(12), 1}, rng), beta);
            worst = std::max(worst, std::abs(modern::energy_continuous(store, {store.column(0)})));
        }
    }
    return {worst <= 1e-12, "max |E| " + fmt(worst)};
}

// 7 ------------------------------------------------------------------------
Verdict schedule_fidelity() {
    const seg::TrainConfig c;
    const double e0 = seg::lr_at(c, 0), e_warm = seg::lr_at(c, c.warmup_epochs), e_last = seg::lr_at(c, c.epochs - 1);
    const bool pass =
        std::abs(e0 - 1e-6) <= 1e-8 && std::abs(e_warm - 5e-4) <= 1e-8 && std::abs(e_last - 1e-5) <= 1e-8;
    return {pass, "epoch 0 -> " + fmt(e0) + ", epoch " + std::to_string(c.warmup_epochs) + " -> " + fmt(e_warm) +
                      ", epoch " + std::to_string(c.epochs - 1) + " -> " + fmt(e_last)};
}

// 8 ------------------------------------------------------------------------
// Desk-scale configuration fixed before measuring: 2 blocks of width 32,
// 256 training and 64 held-out samples, 30 epochs.
Verdict ablation_trend() {
    seg::SegConfig model;
    model.embed_dim = 32;
    model.blocks = 2;
    model.heads = 2;
    seg::TrainConfig train;
    train.epochs = 30;
    train.warmup_epochs = 4;
    train.batch = 16;
    train.lr = 2e-3;
    train.patience = 10;
    seg::AblationSettings settings;
    settings.occlusion_levels = {0.0, 0.4};
    settings.seeds = {1, 2, 3};
    settings.train_samples = 256;
    settings.test_samples = 64;

    const auto runs = seg::ablate(model, train, settings);
    double clean_on = 0, clean_off = 0, occl_on = 0, occl_off = 0;
    double min_clean = 1.0;
    for (const auto& delta : seg::summarize(runs)) {
        if (delta.occlusion == 0.0) {
            clean_on = delta.mean_on;
            clean_off = delta.mean_off;
        } else {
            for (int c : seg::kOccludedStructureClasses) {
                occl_on += delta.class_dice_on[c - 1] / seg::kOccludedStructureClasses.size();
                occl_off += delta.class_dice_off[c - 1] / seg::kOccludedStructureClasses.size();
            }
        }
    }
    for (const auto& r : runs) {
        if (r.occlusion == 0.0) min_clean = std::min(min_clean, r.test.mean_dice);
    }
    const bool pass = occl_on >= occl_off && clean_on > 0.6 && clean_off > 0.6;
    return {pass, "occlusion 0.4 occluded-class dice on " + fmt(occl_on) + " vs off " + fmt(occl_off) +
                      "; occlusion 0 mean dice on " + fmt(clean_on) + ", off " + fmt(clean_off) +
                      " (lowest single run " + fmt(min_clean) + ")"};
}

// 9 ------------------------------------------------------------------------
Verdict cli_determinism() {
    const std::vector<std::vector<std::string>> commands = {
        {"capacity", "--interaction", "poly3", "--n", "64", "--k", "8,32,96", "--trials", "200", "--seed", "11"},
        {"capacity", "--interaction", "exp", "--n", "64", "--k", "64,256", "--trials", "100", "--seed", "11"},
        {"gradcheck", "--target", "dam_forward", "--seed", "11"},
        {"gradcheck", "--target", "seg_loss", "--seed", "11"},
        {"train", "--epochs", "3", "--samples", "32", "--embed-dim", "16", "--blocks", "1", "--heads", "2",
         "--batch", "8", "--seed", "11"},
        {"ablate", "--occlusion", "0,0.4", "--seeds", "3", "--epochs", "1", "--samples", "8", "--test-samples", "4",
         "--embed-dim", "8", "--blocks", "1", "--heads", "2", "--seed", "11"},
        {"census", "--beta", "32", "--patterns", "well_separated_3", "--seed", "11"},
    };
    std::size_t differing = 0, failed = 0;
    for (const auto& cmd : commands) {
        std::ostringstream out1, out2, err;
        const int c1 = cli::run(cmd, out1, err);
        const int c2 = cli::run(cmd, out2, err);
        failed += c1 != 0 || c2 != 0;
        differing += out1.str() != out2.str() || out1.str().empty();
    }
    return {differing == 0 && failed == 0, std::to_string(commands.size()) + " commands, differing outputs " +
                                               std::to_string(differing) + ", failed runs " + std::to_string(failed)};
}

// 10 -----------------------------------------------------------------------
Verdict memory_statics() {
    Rng rng(10);
    const auto mem = memory::init_static_memory(8, 16, 3);
    const auto a = memory::dam_forward_detailed(mem, random_tensor({5, 16}, rng));
    const auto b = memory::dam_forward_detailed(mem, random_tensor({9, 16}, rng, 3.0));
    const bool static_kv = same_bits(a.keys, b.keys) && same_bits(a.values, b.values);

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng r(split_seed(100, seed));
        const auto m = memory::init_static_memory(2 + r.index(10), 12, seed);
        const Tensor q = random_tensor({4, 12}, r, 2.0);
        const auto perm = r.permutation(m.slots());
        Tensor shuffled(m.xi.shape());
        for (std::size_t i = 0; i < m.slots(); ++i) {
            for (std::size_t c = 0; c < 12; ++c) shuffled.data_mut()[i * 12 + c] = m.xi.at(perm[i], c);
        }
        const Tensor y1 = memory::dam_forward(m, q), y2 = memory::dam_forward({shuffled, m.w_k}, q);
        for (std::size_t i = 0; i < y1.size(); ++i) worst = std::max(worst, std::abs(y1.at(i) - y2.at(i)));
    }
    return {static_kv && worst <= 1e-12, std::string("K,V byte-identical across batches: ") +
                                             (static_kv ? "yes" : "no") + "; slot permutation max diff " + fmt(worst)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "n=2 polynomial update equals classical update", 5, quadratic_reduction},
        {2, "energy descent suites", 60, energy_descent},
        {3, "capacity ordering", 600, capacity_ordering},
        {4, "gradient oracles", 120, gradient_oracles},
        {5, "UHN equivalence", 5, uhn_equivalence},
        {6, "single-pattern energy identity", 1, single_pattern_identity},
        {7, "schedule fidelity", 1, schedule_fidelity},
        {8, "ablation trend", 1800, ablation_trend},
        {9, "CLI determinism", 300, cli_determinism},
        {10, "memory statics", 1, memory_statics},
    };
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds <= c.budget_seconds;
        const bool pass = v.pass && in_budget;
        failures += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << v.detail
                  << " [" << fmt(seconds) << " s of " << fmt(c.budget_seconds) << " s"
                  << (in_budget ? "" : ", over budget") << "]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
