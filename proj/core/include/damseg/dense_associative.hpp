#pragma once

// Dense associative memories: E = -sum_mu F(xi^mu . sigma) with a polynomial
// or exponential interaction function F, and the sign-of-energy-difference
// spin update.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "damseg/classical_hopfield.hpp"
#include "damseg/csv.hpp"
#include "damseg/rng.hpp"

namespace damseg::dense {

using hopfield::BipolarState;
using hopfield::PatternStore;

class Interaction {
public:
    enum class Kind { polynomial, exponential };

    /// F(x) = x^n; throws ParameterError for n < 2.
    static Interaction polynomial(int degree);
    /// F(x) = e^x.
    static Interaction exponential();
    /// "poly<n>" or "exp"; throws ParameterError otherwise.
    static Interaction parse(std::string_view name);

    Kind kind() const { return kind_; }
    int degree() const { return degree_; }
    std::string name() const;

    friend bool operator==(const Interaction&, const Interaction&) = default;

private:
    Interaction(Kind kind, int degree) : kind_(kind), degree_(degree) {}
    Kind kind_ = Kind::polynomial;
    int degree_ = 2;
};

struct DamConfig {
    Interaction interaction;
    PatternStore patterns;

    /// Throws ParameterError on an empty store.
    DamConfig(Interaction interaction, PatternStore patterns);
};

/// Overlaps xi^mu . sigma for every stored pattern.
std::vector<double> overlaps(const PatternStore& patterns, const BipolarState& state);

/// Polynomial: -sum_mu (xi^mu . sigma)^n. Exponential: -sum_mu exp(xi^mu . sigma),
/// evaluated max-shifted; throws NumericError only if the result overflows.
double energy_dam(const DamConfig& cfg, const BipolarState& state);

/// sum_mu F(xi^mu_i + a_mu) - F(-xi^mu_i + a_mu), a_mu = sum_{j != i} xi^mu_j sigma_j.
/// For the exponential the sum is scaled by a positive factor exp(-shift),
/// which leaves its sign intact.
double spin_drive(const DamConfig& cfg, std::span<const double> overlaps, const BipolarState& state,
                  std::size_t i);

/// Sign update of spin i with incremental overlap bookkeeping; zero drive
/// keeps the spin. Returns true on flip.
bool update_dam_spin(const DamConfig& cfg, BipolarState& state, std::vector<double>& overlaps,
                     std::size_t i);

/// Sequential updates in the given order (a permutation of 0..N-1).
BipolarState update_dam(const DamConfig& cfg, BipolarState state, std::span<const std::size_t> order);

struct DamRecall {
    BipolarState state;
    std::size_t sweeps_used = 0;
};

/// Asynchronous sweeps, each in a fresh random order drawn from rng, until a
/// sweep changes nothing or max_sweeps is reached.
DamRecall recall_dam(const DamConfig& cfg, const BipolarState& probe, std::size_t max_sweeps, Rng& rng);

struct CapacitySettings {
    Interaction interaction = Interaction::polynomial(2);
    std::size_t n = 64;
    std::vector<std::size_t> k_grid;
    double corruption = 0.1;
    std::size_t trials = 200;
    std::uint64_t seed = 0;
    std::size_t max_sweeps = 20;
};

struct CapacityPoint {
    std::size_t k = 0;
    double recovery_rate = 0.0;
};

/// For each K: random patterns, a probe with round(corruption * N) flipped
/// bits of a random source pattern, recall, and exact-match scoring. Trial t
/// at K draws from split_seed(split_seed(seed, K), t).
/// Throws ParameterError for N > 256, trials < 50, or corruption outside [0, 1].
std::vector<CapacityPoint> capacity_experiment(const CapacitySettings& settings);

/// Largest K of the sorted grid such that every K up to it reaches min_rate;
/// 0 if the first grid point already fails.
std::size_t capacity_threshold(std::span<const CapacityPoint> points, double min_rate = 0.9);

/// Header: interaction,N,K,corruption,trials,recovery_rate
CsvTable capacity_table(const CapacitySettings& settings, std::span<const CapacityPoint> points);

}  // namespace damseg::dense
