#include "damseg/dense_associative.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "damseg/errors.hpp"

namespace damseg::dense {

Interaction Interaction::polynomial(int degree) {
    if (degree < 2) {
        throw ParameterError("Interaction: polynomial degree must be >= 2, got " +
                             std::to_string(degree));
    }
    return Interaction(Kind::polynomial, degree);
}

Interaction Interaction::exponential() { return Interaction(Kind::exponential, 0); }

Interaction Interaction::parse(std::string_view name) {
    if (name == "exp" || name == "exponential") return exponential();
    if (name.starts_with("poly")) {
        int degree = 0;
        const auto digits = name.substr(4);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), degree);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
            return polynomial(degree);
        }
    }
    throw ParameterError("unknown interaction '" + std::string(name) + "' (expected poly<n> or exp)");
}

std::string Interaction::name() const {
    return kind_ == Kind::exponential ? "exp" : "poly" + std::to_string(degree_);
}

DamConfig::DamConfig(Interaction interaction_, PatternStore patterns_)
    : interaction(interaction_), patterns(std::move(patterns_)) {
    if (patterns.count() == 0) throw ParameterError("DamConfig: empty pattern store");
}

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

void require_size(const DamConfig& cfg, const BipolarState& state) {
    if (cfg.patterns.width() != state.size()) {
        throw DimensionError("dense: patterns of width " + std::to_string(cfg.patterns.width()) +
                             " vs state of size " + std::to_string(state.size()));
    }
}

}  // namespace

std::vector<double> overlaps(const PatternStore& patterns, const BipolarState& state) {
    std::vector<double> m(patterns.count(), 0.0);
    for (std::size_t mu = 0; mu < patterns.count(); ++mu) {
        auto xi = patterns.pattern(mu);
        long long dot = 0;
        for (std::size_t i = 0; i < xi.size(); ++i) dot += xi[i] * state[i];
        m[mu] = static_cast<double>(dot);
    }
    return m;
}

double energy_dam(const DamConfig& cfg, const BipolarState& state) {
    require_size(cfg, state);
    const auto m = overlaps(cfg.patterns, state);
    if (cfg.interaction.kind() == Interaction::Kind::polynomial) {
        double total = 0.0;
        for (double x : m) total += ipow(x, cfg.interaction.degree());
        return -total;
    }
    const double shift = *std::max_element(m.begin(), m.end());
    double total = 0.0;
    for (double x : m) total += std::exp(x - shift);
    const double e = -std::exp(shift) * total;
    if (!std::isfinite(e)) throw NumericError("energy_dam: exponential energy overflows");
    return e;
}

double spin_drive(const DamConfig& cfg, std::span<const double> m, const BipolarState& state,
                  std::size_t i) {
    const auto& patterns = cfg.patterns;
    const std::size_t k = patterns.count();
    if (cfg.interaction.kind() == Interaction::Kind::polynomial) {
        const int n = cfg.interaction.degree();
        double drive = 0.0;
        for (std::size_t mu = 0; mu < k; ++mu) {
            const double xi = patterns.pattern(mu)[i];
            const double rest = m[mu] - xi * state[i];
            drive += ipow(xi + rest, n) - ipow(-xi + rest, n);
        }
        return drive;
    }
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t mu = 0; mu < k; ++mu) {
        const double xi = patterns.pattern(mu)[i];
        shift = std::max(shift, m[mu] - xi * state[i] + 1.0);
    }
    double drive = 0.0;
    for (std::size_t mu = 0; mu < k; ++mu) {
        const double xi = patterns.pattern(mu)[i];
        const double rest = m[mu] - xi * state[i] - shift;
        drive += std::exp(xi + rest) - std::exp(-xi + rest);
    }
    return drive;
}

bool update_dam_spin(const DamConfig& cfg, BipolarState& state, std::vector<double>& m, std::size_t i) {
    const double drive = spin_drive(cfg, m, state, i);
    if (drive == 0.0) return false;
    const int target = drive > 0.0 ? 1 : -1;
    if (target == state[i]) return false;
    for (std::size_t mu = 0; mu < cfg.patterns.count(); ++mu) {
        m[mu] += 2.0 * target * cfg.patterns.pattern(mu)[i];
    }
    state.flip(i);
    return true;
}

BipolarState update_dam(const DamConfig& cfg, BipolarState state, std::span<const std::size_t> order) {
    require_size(cfg, state);
    hopfield::require_permutation(order, state.size());
    auto m = overlaps(cfg.patterns, state);
    for (auto i : order) update_dam_spin(cfg, state, m, i);
    return state;
}

DamRecall recall_dam(const DamConfig& cfg, const BipolarState& probe, std::size_t max_sweeps, Rng& rng) {
    require_size(cfg, probe);
    if (max_sweeps < 1) throw ParameterError("recall_dam: max_sweeps must be >= 1");
    DamRecall result{probe, 0};
    auto m = overlaps(cfg.patterns, probe);
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        bool changed = false;
        for (auto i : rng.permutation(probe.size())) {
            changed = update_dam_spin(cfg, result.state, m, i) || changed;
        }
        result.sweeps_used = sweep;
        if (!changed) break;
    }
    return result;
}

std::vector<CapacityPoint> capacity_experiment(const CapacitySettings& s) {
    if (s.n == 0 || s.n > 256) throw ParameterError("capacity_experiment: N must lie in [1, 256]");
    if (s.trials < 50) throw ParameterError("capacity_experiment: trials must be >= 50");
    if (!(s.corruption >= 0.0 && s.corruption <= 1.0)) {
        throw ParameterError("capacity_experiment: corruption must lie in [0, 1]");
    }
    if (s.k_grid.empty()) throw ParameterError("capacity_experiment: empty K grid");
    for (auto k : s.k_grid) {
        if (k == 0) throw ParameterError("capacity_experiment: K must be >= 1");
    }
    const auto flips = static_cast<std::size_t>(std::lround(s.corruption * static_cast<double>(s.n)));

    std::vector<CapacityPoint> points;
    for (auto k : s.k_grid) {
        const std::uint64_t k_seed = split_seed(s.seed, k);
        std::size_t recovered = 0;
        for (std::size_t t = 0; t < s.trials; ++t) {
            Rng rng(split_seed(k_seed, t));
            DamConfig cfg(s.interaction, PatternStore::random(k, s.n, rng));
            const std::size_t source = rng.index(k);
            BipolarState probe = cfg.patterns.state(source);
            for (auto i : rng.sample_without_replacement(s.n, flips)) probe.flip(i);
            const auto result = recall_dam(cfg, probe, s.max_sweeps, rng);
            recovered += result.state == cfg.patterns.state(source);
        }
        points.push_back({k, static_cast<double>(recovered) / static_cast<double>(s.trials)});
    }
    return points;
}

std::size_t capacity_threshold(std::span<const CapacityPoint> points, double min_rate) {
    std::vector<CapacityPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const CapacityPoint& a, const CapacityPoint& b) { return a.k < b.k; });
    std::size_t best = 0;
    for (const auto& p : sorted) {
        if (p.recovery_rate < min_rate) break;
        best = p.k;
    }
    return best;
}

CsvTable capacity_table(const CapacitySettings& s, std::span<const CapacityPoint> points) {
    CsvTable table;
    table.header = {"interaction", "N", "K", "corruption", "trials", "recovery_rate"};
    for (const auto& p : points) {
        table.add_row({s.interaction.name(), std::to_string(s.n), std::to_string(p.k),
                       format_number(s.corruption), std::to_string(s.trials),
                       format_number(p.recovery_rate)});
    }
    return table;
}

}  // namespace damseg::dense
