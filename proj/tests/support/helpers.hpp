#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

#include "damseg/rng.hpp"
#include "damseg/tensor.hpp"

namespace damseg::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double stddev = 1.0) {
    const auto n = shape_numel(shape);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0.0, stddev);
    return Tensor(std::move(shape), std::move(v));
}

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double stddev = 1.0) {
    Rng rng(seed);
    return random_tensor(std::move(shape), rng, stddev);
}

inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

}  // namespace damseg::testing
