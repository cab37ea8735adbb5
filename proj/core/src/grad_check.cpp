#include "damseg/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "damseg/errors.hpp"

namespace damseg {

namespace {

void check_eps(double eps) {
    if (!(eps > 0.0 && eps <= 1e-3)) {
        throw ParameterError("grad_check: eps must lie in (0, 1e-3], got " + std::to_string(eps));
    }
}

double finite_value(const Tensor& y) {
    if (y.size() != 1) {
        throw ContractError("grad_check: function must return a scalar, got " +
                            shape_to_string(y.shape()));
    }
    const double v = y.item();
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
    return v;
}

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

}  // namespace

double grad_check(const ScalarFunction& f, const Tensor& x, double eps) {
    check_eps(eps);
    Tensor leaf = x.detach();
    leaf.set_requires_grad(true);
    const Tensor y = f(leaf);
    finite_value(y);
    backward(y);
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());

    double worst = 0.0;
    Tensor probe = x.detach();
    auto values = probe.data_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + eps;
        const double up = finite_value(f(probe));
        values[i] = saved - eps;
        const double down = finite_value(f(probe));
        values[i] = saved;
        worst = std::max(worst, relative_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    return worst;
}

double grad_check_entries(const std::function<Tensor()>& loss, std::span<Tensor> params,
                          std::span<const ParamEntry> entries, double eps) {
    check_eps(eps);
    for (auto& p : params) {
        p.set_requires_grad(true);
        p.zero_grad();
    }
    const Tensor y = loss();
    finite_value(y);
    backward(y);

    std::vector<double> analytic;
    analytic.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.tensor >= params.size() || e.index >= params[e.tensor].size()) {
            throw ParameterError("grad_check_entries: entry out of range");
        }
        analytic.push_back(params[e.tensor].grad()[e.index]);
    }

    double worst = 0.0;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        auto values = params[entries[k].tensor].data_mut();
        double& slot = values[entries[k].index];
        const double saved = slot;
        slot = saved + eps;
        const double up = finite_value(loss());
        slot = saved - eps;
        const double down = finite_value(loss());
        slot = saved;
        worst = std::max(worst, relative_error(analytic[k], (up - down) / (2.0 * eps)));
    }
    for (auto& p : params) p.zero_grad();
    return worst;
}

}  // namespace damseg
