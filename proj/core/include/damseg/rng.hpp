#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace damseg {

/// Derives an independent child seed from (master, stream) with the
/// SplitMix64 finalizer applied to master + golden_gamma * (stream + 1).
/// Every random draw in the library flows from a master seed through this
/// function; there is no global generator.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded pseudo-random source (mt19937_64) with the handful of draws the
/// library needs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double stddev = 1.0);
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    /// +1 or -1 with equal probability.
    int spin();
    std::vector<std::size_t> permutation(std::size_t n);
    /// k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace damseg
