#include "damseg/classical_hopfield.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "damseg/errors.hpp"

namespace damseg::hopfield {

BipolarState::BipolarState(std::vector<int> spins) : spins_(std::move(spins)) {
    for (std::size_t i = 0; i < spins_.size(); ++i) {
        if (spins_[i] != 1 && spins_[i] != -1) {
            throw ParameterError("BipolarState: entry " + std::to_string(i) + " is " +
                                 std::to_string(spins_[i]) + ", expected +-1");
        }
    }
}

BipolarState BipolarState::random(std::size_t n, Rng& rng) {
    std::vector<int> spins(n);
    for (auto& s : spins) s = rng.spin();
    return BipolarState(std::move(spins));
}

BipolarState BipolarState::negated() const {
    BipolarState out = *this;
    for (auto& s : out.spins_) s = -s;
    return out;
}

std::size_t BipolarState::hamming(const BipolarState& other) const {
    if (other.size() != size()) throw DimensionError("hamming: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < size(); ++i) d += spins_[i] != other.spins_[i];
    return d;
}

PatternStore::PatternStore(const std::vector<BipolarState>& patterns) {
    if (patterns.empty()) throw ParameterError("PatternStore: no patterns");
    count_ = patterns.size();
    width_ = patterns.front().size();
    if (width_ == 0) throw ParameterError("PatternStore: zero-width patterns");
    values_.reserve(count_ * width_);
    for (const auto& p : patterns) {
        if (p.size() != width_) {
            throw DimensionError("PatternStore: pattern of length " + std::to_string(p.size()) +
                                 " in store of width " + std::to_string(width_));
        }
        values_.insert(values_.end(), p.spins().begin(), p.spins().end());
    }
}

PatternStore PatternStore::random(std::size_t count, std::size_t width, Rng& rng) {
    std::vector<BipolarState> patterns;
    patterns.reserve(count);
    for (std::size_t mu = 0; mu < count; ++mu) patterns.push_back(BipolarState::random(width, rng));
    return PatternStore(patterns);
}

BipolarState PatternStore::state(std::size_t mu) const {
    auto p = pattern(mu);
    return BipolarState(std::vector<int>(p.begin(), p.end()));
}

HebbianWeights::HebbianWeights(std::size_t n, std::vector<double> couplings, double scale)
    : n_(n), couplings_(std::move(couplings)), scale_(scale) {
    if (couplings_.size() != n * n) {
        throw DimensionError("HebbianWeights: " + std::to_string(couplings_.size()) +
                             " values for N=" + std::to_string(n));
    }
    if (!(scale > 0.0)) throw ParameterError("HebbianWeights: scale must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (couplings_[i * n + i] != 0.0) throw ParameterError("HebbianWeights: nonzero diagonal");
        for (std::size_t j = 0; j < i; ++j) {
            if (couplings_[i * n + j] != couplings_[j * n + i]) {
                throw ParameterError("HebbianWeights: matrix is not symmetric");
            }
        }
    }
}

std::vector<double> HebbianWeights::matrix() const {
    std::vector<double> t(couplings_.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = scale_ * couplings_[k];
    return t;
}

HebbianWeights store(const PatternStore& patterns) {
    if (patterns.count() == 0) throw ParameterError("store: empty pattern store");
    const std::size_t n = patterns.width();
    std::vector<double> sums(n * n, 0.0);
    for (std::size_t mu = 0; mu < patterns.count(); ++mu) {
        auto xi = patterns.pattern(mu);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) sums[i * n + j] += xi[i] * xi[j];
            }
        }
    }
    return HebbianWeights(n, std::move(sums), 1.0 / static_cast<double>(n));
}

namespace {

void require_size(const HebbianWeights& w, const BipolarState& s) {
    if (w.size() != s.size()) {
        throw DimensionError("hopfield: weights of size " + std::to_string(w.size()) +
                             " vs state of size " + std::to_string(s.size()));
    }
}

}  // namespace

double energy(const HebbianWeights& weights, const BipolarState& state) {
    require_size(weights, state);
    const std::size_t n = state.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) total += weights(i, j) * state[i] * state[j];
        }
    }
    return -0.5 * total;
}

double unscaled_field(const HebbianWeights& weights, const BipolarState& state, std::size_t i) {
    double h = 0.0;
    for (std::size_t j = 0; j < state.size(); ++j) h += weights.coupling(i, j) * state[j];
    return h;
}

bool update_spin(const HebbianWeights& weights, BipolarState& state, std::size_t i) {
    const double h = unscaled_field(weights, state, i);
    if (h == 0.0) return false;
    const int target = h > 0.0 ? 1 : -1;
    if (target == state[i]) return false;
    state.flip(i);
    return true;
}

void require_permutation(std::span<const std::size_t> order, std::size_t n) {
    if (order.size() != n) {
        throw ParameterError("update order has " + std::to_string(order.size()) +
                             " entries, expected a permutation of " + std::to_string(n));
    }
    std::vector<bool> seen(n, false);
    for (auto i : order) {
        if (i >= n || seen[i]) throw ParameterError("update order is not a permutation");
        seen[i] = true;
    }
}

BipolarState update_async(const HebbianWeights& weights, BipolarState state,
                          std::span<const std::size_t> order) {
    require_size(weights, state);
    require_permutation(order, state.size());
    for (auto i : order) update_spin(weights, state, i);
    return state;
}

BipolarState update_sync(const HebbianWeights& weights, const BipolarState& state) {
    require_size(weights, state);
    BipolarState next = state;
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double h = unscaled_field(weights, state, i);
        if (h != 0.0 && (h > 0.0 ? 1 : -1) != state[i]) next.flip(i);
    }
    return next;
}

RecallResult recall(const HebbianWeights& weights, const BipolarState& probe, std::size_t max_sweeps,
                    std::span<const std::size_t> order) {
    require_size(weights, probe);
    if (max_sweeps < 1) throw ParameterError("recall: max_sweeps must be >= 1");
    std::vector<std::size_t> natural;
    if (order.empty()) {
        natural.resize(probe.size());
        std::iota(natural.begin(), natural.end(), std::size_t{0});
        order = natural;
    }
    require_permutation(order, probe.size());

    RecallResult result;
    result.state = probe;
    result.energy_trajectory.push_back(energy(weights, probe));
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        bool changed = false;
        for (auto i : order) changed = update_spin(weights, result.state, i) || changed;
        result.sweeps_used = sweep;
        result.energy_trajectory.push_back(energy(weights, result.state));
        if (!changed) break;
    }
    return result;
}

}  // namespace damseg::hopfield
