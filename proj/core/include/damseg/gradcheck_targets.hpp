#pragma once

// Registered finite-difference checks over random seeded instances.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace damseg {

struct GradCheckReport {
    std::string target;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool passed() const { return max_rel_err < tolerance; }
};

/// matmul, softmax_rows, energy_continuous, dam_forward, seg_loss.
const std::vector<std::string>& gradcheck_targets();

/// Builds a random instance from `seed` and compares analytic gradients with
/// central differences at eps. Throws ParameterError for an unknown target.
GradCheckReport run_gradcheck(std::string_view target, std::uint64_t seed, double eps = 1e-6);

}  // namespace damseg
