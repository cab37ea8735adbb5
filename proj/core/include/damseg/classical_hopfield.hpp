#pragma once

// Binary Hopfield network with Hebbian storage.

#include <cstddef>
#include <span>
#include <vector>

#include "damseg/rng.hpp"

namespace damseg::hopfield {

/// Vector of spins, each exactly +1 or -1.
class BipolarState {
public:
    BipolarState() = default;
    /// Throws ParameterError if any entry is not +-1.
    explicit BipolarState(std::vector<int> spins);
    static BipolarState random(std::size_t n, Rng& rng);

    std::size_t size() const { return spins_.size(); }
    int operator[](std::size_t i) const { return spins_[i]; }
    std::span<const int> spins() const { return spins_; }

    void flip(std::size_t i) { spins_[i] = -spins_[i]; }
    BipolarState negated() const;
    std::size_t hamming(const BipolarState& other) const;

    friend bool operator==(const BipolarState&, const BipolarState&) = default;

private:
    std::vector<int> spins_;
};

/// K x N matrix of bipolar patterns; row mu is xi^mu.
class PatternStore {
public:
    PatternStore() = default;
    /// Throws ParameterError if empty, ragged, or not bipolar.
    explicit PatternStore(const std::vector<BipolarState>& patterns);
    static PatternStore random(std::size_t count, std::size_t width, Rng& rng);

    std::size_t count() const { return count_; }
    std::size_t width() const { return width_; }
    std::span<const int> pattern(std::size_t mu) const {
        return {values_.data() + mu * width_, width_};
    }
    BipolarState state(std::size_t mu) const;

private:
    std::size_t count_ = 0;
    std::size_t width_ = 0;
    std::vector<int> values_;
};

/// Symmetric, zero-diagonal coupling matrix T = scale * couplings.
///
/// Hebbian storage keeps the integer-valued sum over patterns in
/// `couplings` and the 1/N normalization in `scale`, so local fields can be
/// signed from exact integer arithmetic.
class HebbianWeights {
public:
    HebbianWeights() = default;
    /// Throws ParameterError unless values is symmetric with zero diagonal,
    /// or scale is not positive.
    HebbianWeights(std::size_t n, std::vector<double> couplings, double scale = 1.0);

    std::size_t size() const { return n_; }
    double scale() const { return scale_; }
    double operator()(std::size_t i, std::size_t j) const { return scale_ * couplings_[i * n_ + j]; }
    double coupling(std::size_t i, std::size_t j) const { return couplings_[i * n_ + j]; }
    /// Normalized T, row-major.
    std::vector<double> matrix() const;

private:
    std::size_t n_ = 0;
    std::vector<double> couplings_;
    double scale_ = 1.0;
};

/// T_ij = (1/N) sum_mu xi^mu_i xi^mu_j for i != j, T_ii = 0.
HebbianWeights store(const PatternStore& patterns);

/// -1/2 sum_{i != j} T_ij s_i s_j.
double energy(const HebbianWeights& weights, const BipolarState& state);

/// Local field sum_j T_ij s_j with the positive scale factored out.
double unscaled_field(const HebbianWeights& weights, const BipolarState& state, std::size_t i);

/// Sets s_i <- sign(field); a zero field keeps the spin. Returns true on flip.
bool update_spin(const HebbianWeights& weights, BipolarState& state, std::size_t i);

/// Sequential sign updates in the given order (a permutation of 0..N-1).
BipolarState update_async(const HebbianWeights& weights, BipolarState state,
                          std::span<const std::size_t> order);

/// All spins updated from the same previous state.
BipolarState update_sync(const HebbianWeights& weights, const BipolarState& state);

struct RecallResult {
    BipolarState state;
    std::size_t sweeps_used = 0;
    /// Energy of the probe followed by the energy after every sweep.
    std::vector<double> energy_trajectory;
};

/// Repeats asynchronous sweeps until one changes nothing or max_sweeps is
/// reached. An empty order means 0..N-1.
RecallResult recall(const HebbianWeights& weights, const BipolarState& probe, std::size_t max_sweeps,
                    std::span<const std::size_t> order = {});

/// Throws ParameterError unless order is a permutation of 0..n-1.
void require_permutation(std::span<const std::size_t> order, std::size_t n);

}  // namespace damseg::hopfield
