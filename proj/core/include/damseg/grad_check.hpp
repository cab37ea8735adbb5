#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "damseg/tensor.hpp"

namespace damseg {

using ScalarFunction = std::function<Tensor(const Tensor&)>;

/// Max over entries of |analytic - central difference| / max(1, |central difference|)
/// for the gradient of scalar f at x. eps must lie in (0, 1e-3].
double grad_check(const ScalarFunction& f, const Tensor& x, double eps = 1e-6);

struct ParamEntry {
    std::size_t tensor = 0;
    std::size_t index = 0;
};

/// Same statistic over selected entries of several parameter leaves. The
/// parameters are perturbed in place and restored; loss() must rebuild its
/// graph from them on every call.
double grad_check_entries(const std::function<Tensor()>& loss, std::span<Tensor> params,
                          std::span<const ParamEntry> entries, double eps = 1e-6);

}  // namespace damseg
