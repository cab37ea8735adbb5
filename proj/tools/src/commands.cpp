#include "damseg_cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "damseg/ablation.hpp"
#include "damseg/csv.hpp"
#include "damseg/dense_associative.hpp"
#include "damseg/errors.hpp"
#include "damseg/gradcheck_targets.hpp"
#include "damseg/modern_hopfield.hpp"
#include "damseg/rng.hpp"
#include "damseg/synthetic_data.hpp"
#include "damseg/training.hpp"
#include "damseg_cli/config_file.hpp"

namespace damseg::cli {

namespace {

// Malformed inputs detected by the CLI itself; mapped to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("DAM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError(std::string("DAM_SEED is not an unsigned integer: ") + env);
        }
    }
    return 0;
}

void emit(const CsvTable& table, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        write_csv(out, table);
    } else {
        write_csv_file(path, table);
    }
}

struct CommonOptions {
    std::uint64_t seed = 0;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--seed", common.seed, "Master seed (default: $DAM_SEED or 0)");
    cmd->add_option("--out", common.out, "Output CSV path (default: stdout)");
}

// ---------------------------------------------------------------------------
// capacity

struct CapacityArgs {
    CommonOptions common;
    std::string interaction = "poly2";
    std::size_t n = 0;
    std::vector<std::size_t> k;
    double corruption = 0.1;
    std::size_t trials = 200;
    std::size_t max_sweeps = 20;
};

void setup_capacity(CLI::App& app, CapacityArgs& a) {
    auto* cmd = app.add_subcommand("capacity", "Recovery rate versus stored pattern count");
    add_common(cmd, a.common);
    cmd->add_option("--interaction", a.interaction, "poly<n> or exp");
    cmd->add_option("--n", a.n, "Pattern width N (<= 256)")->required();
    cmd->add_option("--k", a.k, "Comma-separated pattern counts")->required()->delimiter(',');
    cmd->add_option("--corruption", a.corruption, "Fraction of flipped probe bits");
    cmd->add_option("--trials", a.trials, "Trials per K (>= 50)");
    cmd->add_option("--max-sweeps", a.max_sweeps, "Recall sweep limit");
}

int run_capacity(const CapacityArgs& a, std::ostream& out) {
    dense::CapacitySettings s;
    s.interaction = dense::Interaction::parse(a.interaction);
    s.n = a.n;
    s.k_grid = a.k;
    s.corruption = a.corruption;
    s.trials = a.trials;
    s.seed = a.common.seed;
    s.max_sweeps = a.max_sweeps;
    const auto points = dense::capacity_experiment(s);
    emit(dense::capacity_table(s, points), a.common.out, out);
    return kSuccess;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
    CommonOptions common;
    std::string target;
    double eps = 1e-6;
};

void setup_gradcheck(CLI::App& app, GradcheckArgs& a) {
    auto* cmd = app.add_subcommand("gradcheck", "Analytic versus finite-difference gradients");
    add_common(cmd, a.common);
    cmd->add_option("--target", a.target, "One of: matmul, softmax_rows, energy_continuous, dam_forward, seg_loss")
        ->required();
    cmd->add_option("--eps", a.eps, "Central-difference step");
}

int run_gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
    const auto& targets = gradcheck_targets();
    if (std::find(targets.begin(), targets.end(), a.target) == targets.end()) {
        std::string list;
        for (const auto& t : targets) list += (list.empty() ? "" : ", ") + t;
        throw UsageError("unknown target '" + a.target + "'; available: " + list);
    }
    const auto report = run_gradcheck(a.target, a.common.seed, a.eps);
    CsvTable table;
    table.header = {"target", "seed", "eps", "max_rel_err", "tolerance", "passed"};
    table.add_row({report.target, std::to_string(a.common.seed), format_number(a.eps),
                   format_number(report.max_rel_err), format_number(report.tolerance),
                   report.passed() ? "1" : "0"});
    emit(table, a.common.out, out);
    return report.passed() ? kSuccess : kRuntimeFailure;
}

// ---------------------------------------------------------------------------
// train / ablate

struct ModelArgs {
    seg::SegConfig seg;
    seg::TrainConfig train;
    std::string memory = "on";
    std::size_t patience = 0;  // 0: min(10, epochs)
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--image-size", m.seg.image_size, "Image side length");
    cmd->add_option("--patch-size", m.seg.patch_size, "Patch side length");
    cmd->add_option("--embed-dim", m.seg.embed_dim, "Token width d");
    cmd->add_option("--blocks", m.seg.blocks, "Transformer blocks");
    cmd->add_option("--heads", m.seg.heads, "Attention heads");
    cmd->add_option("--mlp-ratio", m.seg.mlp_ratio, "MLP hidden width as a multiple of d");
    cmd->add_option("--memory-slots", m.seg.memory_slots, "Static memory slots m per block");
    cmd->add_option("--epochs", m.train.epochs, "Total epochs");
    cmd->add_option("--warmup-epochs", m.train.warmup_epochs, "Linear warmup epochs");
    cmd->add_option("--batch", m.train.batch, "Mini-batch size");
    cmd->add_option("--lr", m.train.lr, "Peak learning rate");
    cmd->add_option("--warmup-lr", m.train.warmup_lr, "Learning rate at epoch 0");
    cmd->add_option("--min-lr", m.train.min_lr, "Learning rate at the last epoch");
    cmd->add_option("--patience", m.patience, "Epochs without improvement before stopping");
}

void finalize_model_args(ModelArgs& m) {
    if (m.memory != "on" && m.memory != "off") throw UsageError("--memory must be 'on' or 'off'");
    m.seg.use_memory = m.memory == "on";
    m.train.patience = m.patience == 0 ? std::min<std::size_t>(10, m.train.epochs) : m.patience;
    if (m.train.epochs <= m.train.warmup_epochs) {
        // short smoke runs: scale the warmup down with the epoch budget
        m.train.warmup_epochs = m.train.epochs / 6;
    }
    m.seg.validate();
    m.train.validate();
}

struct TrainArgs {
    CommonOptions common;
    ModelArgs model;
    std::size_t samples = 256;
    double occlusion = 0.3;
    std::string checkpoint;
    std::string memory_weights;
};

void setup_train(CLI::App& app, TrainArgs& a) {
    auto* cmd = app.add_subcommand("train", "Train the segmenter on synthetic occluded data");
    add_common(cmd, a.common);
    add_model_options(cmd, a.model);
    cmd->add_option("--memory", a.model.memory, "Static memory branch: on or off");
    cmd->add_option("--samples", a.samples, "Synthetic samples (90/10 train/val)");
    cmd->add_option("--occlusion", a.occlusion, "Occluded fraction of boundary pixels");
    cmd->add_option("--checkpoint", a.checkpoint, "Write the best model to this file");
    cmd->add_option("--memory-weights", a.memory_weights,
                    "Write each block's memory as <prefix><block>.damw");
}

int run_train(TrainArgs& a, std::ostream& out, std::ostream& err) {
    finalize_model_args(a.model);
    if (a.samples == 0) throw ParameterError("--samples must be >= 1");
    if (!(a.occlusion >= 0.0 && a.occlusion <= 1.0)) throw ParameterError("--occlusion must lie in [0, 1]");
    const auto data = seg::generate_dataset(a.samples, a.occlusion, a.common.seed, a.model.seg.image_size);
    const auto result = seg::train(a.model.seg, a.model.train, data, a.common.seed);
    emit(result.record.table(), a.common.out, out);
    err << "best epoch " << result.record.best_epoch << ", val mean dice "
        << format_number(result.record.best_val_mean_dice) << '\n';
    if (!a.checkpoint.empty()) seg::save_checkpoint(a.checkpoint, result.model);
    if (!a.memory_weights.empty()) {
        for (std::size_t b = 0; b < result.model.memories.size(); ++b) {
            memory::save_static_memory(a.memory_weights + std::to_string(b) + ".damw", result.model.memories[b]);
        }
    }
    return kSuccess;
}

struct AblateArgs {
    CommonOptions common;
    ModelArgs model;
    std::vector<double> occlusion = {0.0, 0.4};
    std::size_t seeds = 3;
    std::size_t samples = 256;
    std::size_t test_samples = 64;
};

void setup_ablate(CLI::App& app, AblateArgs& a) {
    auto* cmd = app.add_subcommand("ablate", "Memory on/off comparison across occlusion levels");
    add_common(cmd, a.common);
    add_model_options(cmd, a.model);
    cmd->add_option("--occlusion", a.occlusion, "Comma-separated occlusion levels")->delimiter(',');
    cmd->add_option("--seeds", a.seeds, "Number of seeds (>= 3); seeds are seed, seed+1, ...");
    cmd->add_option("--samples", a.samples, "Training samples per run");
    cmd->add_option("--test-samples", a.test_samples, "Held-out samples per run");
}

int run_ablate(AblateArgs& a, std::ostream& out, std::ostream& err) {
    finalize_model_args(a.model);
    seg::AblationSettings s;
    s.occlusion_levels = a.occlusion;
    for (std::size_t i = 0; i < a.seeds; ++i) s.seeds.push_back(a.common.seed + i);
    s.train_samples = a.samples;
    s.test_samples = a.test_samples;
    for (double level : s.occlusion_levels) {
        if (!(level >= 0.0 && level <= 1.0)) throw ParameterError("--occlusion levels must lie in [0, 1]");
    }
    if (s.seeds.size() < 3) throw ParameterError("--seeds must be >= 3");
    const auto runs = seg::ablate(a.model.seg, a.model.train, s);
    emit(seg::ablation_table(runs), a.common.out, out);
    for (const auto& d : seg::summarize(runs)) {
        err << "occlusion " << format_number(d.occlusion) << ": mean dice on " << format_number(d.mean_on)
            << ", off " << format_number(d.mean_off);
        for (std::size_t c = 0; c < d.class_dice_on.size(); ++c) {
            err << ", c" << c + 1 << " delta " << format_number(d.class_dice_on[c] - d.class_dice_off[c]);
        }
        err << '\n';
    }
    return kSuccess;
}

// ---------------------------------------------------------------------------
// census

struct CensusArgs {
    CommonOptions common;
    double beta = 0.0;
    std::string patterns = "well_separated_3";
    std::size_t probes = 60;
    std::size_t iters = 50;
    double noise = 0.1;
    double merge_tol = -1.0;
};

void setup_census(CLI::App& app, CensusArgs& a) {
    auto* cmd = app.add_subcommand("census", "Attractors of continuous retrieval dynamics");
    add_common(cmd, a.common);
    cmd->add_option("--beta", a.beta, "Inverse temperature")->required();
    cmd->add_option("--patterns", a.patterns, "Preset well_separated_<k> or a pattern file (one pattern per line)");
    cmd->add_option("--probes", a.probes, "Number of probes");
    cmd->add_option("--iters", a.iters, "Retrieval iterations per probe");
    cmd->add_option("--noise", a.noise, "Probe noise standard deviation");
    cmd->add_option("--merge-tol", a.merge_tol, "Attractor merge distance (default 1e-4 * mean pattern norm)");
}

// Patterns as columns of a d x N matrix.
Tensor read_pattern_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open pattern file " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream is(line);
        std::vector<double> row;
        std::string token;
        while (is >> token) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != token.size() || !std::isfinite(v)) {
                throw UsageError(path + ":" + std::to_string(line_no) + ": malformed number '" + token + "'");
            }
            row.push_back(v);
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(rows.front().size()) + " values, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw UsageError(path + ": no patterns");
    const std::size_t d = rows.front().size(), n = rows.size();
    Tensor x({d, n});
    auto v = x.data_mut();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r = 0; r < d; ++r) v[r * n + j] = rows[j][r];
    }
    return x;
}

int run_census(const CensusArgs& a, std::ostream& out) {
    if (!(a.beta > 0.0)) throw ParameterError("--beta must be positive");
    if (a.probes == 0 || a.iters == 0) throw ParameterError("--probes and --iters must be >= 1");
    Rng rng(split_seed(a.common.seed, 0));
    Tensor patterns;
    const std::string preset = "well_separated_";
    if (a.patterns.starts_with(preset)) {
        std::size_t count = 0;
        try {
            count = std::stoul(a.patterns.substr(preset.size()));
        } catch (const std::exception&) {
            throw UsageError("bad preset '" + a.patterns + "'");
        }
        patterns = modern::well_separated_patterns(count, 16, 1.0, rng);
    } else {
        patterns = read_pattern_file(a.patterns);
    }
    const modern::ContinuousStore store(patterns, a.beta);
    Rng probe_rng(split_seed(a.common.seed, 1));
    const auto probes = modern::probes_near_patterns(store, a.probes, a.noise, probe_rng);
    const double tol = a.merge_tol >= 0.0 ? a.merge_tol : modern::default_merge_tol(store);
    const auto attractors = modern::metastable_census(store, probes, a.iters, tol);
    emit(modern::census_table(attractors), a.common.out, out);
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dense associative memory experiments", "damseg"};
    app.require_subcommand(1);
    CapacityArgs capacity;
    GradcheckArgs gradcheck;
    TrainArgs train;
    AblateArgs ablate;
    CensusArgs census;
    try {
        const std::uint64_t seed = default_seed();
        for (auto* c : {&capacity.common, &gradcheck.common, &train.common, &ablate.common, &census.common}) {
            c->seed = seed;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    setup_capacity(app, capacity);
    setup_gradcheck(app, gradcheck);
    setup_train(app, train);
    setup_ablate(app, ablate);
    setup_census(app, census);
    app.add_option("--config", "Plain-text 'key = value' file; flags override it");

    std::vector<std::string> args;
    try {
        args = merge_config(raw_args);
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsageError;
    } catch (const ConfigFileError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (app.got_subcommand("capacity")) return run_capacity(capacity, out);
        if (app.got_subcommand("gradcheck")) return run_gradcheck_cmd(gradcheck, out);
        if (app.got_subcommand("train")) return run_train(train, out, err);
        if (app.got_subcommand("ablate")) return run_ablate(ablate, out, err);
        if (app.got_subcommand("census")) return run_census(census, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}

}  // namespace damseg::cli
