#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "damseg/errors.hpp"
#include "damseg/tensor.hpp"

namespace damseg {

namespace {

using detail::Node;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

using Backward = std::function<void(Node&)>;

Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::initializer_list<Tensor> inputs, Backward backward) {
    for (double v : value) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite result");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    node->op = op;
    bool needs_grad = false;
    for (const auto& t : inputs) needs_grad = needs_grad || t.requires_grad();
    if (needs_grad) {
        node->requires_grad = true;
        for (const auto& t : inputs) node->inputs.push_back(t.node());
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

// Gradient buffer of input k, or nullptr when that input is constant.
std::vector<double>* input_grad(Node& out, std::size_t k) {
    auto& in = *out.inputs[k];
    return in.requires_grad ? &in.grad_buffer() : nullptr;
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a) +
                         " and " + shape_to_string(b));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void require_rank(const char* op, const Tensor& a, std::size_t rank) {
    if (a.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got " + shape_to_string(a.shape()));
    }
}

void require_finite(const char* op, std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
    }
}

std::size_t last_extent(const Tensor& a) { return a.rank() == 0 ? 1 : a.shape().back(); }

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape("add", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (auto* g = input_grad(n, k)) {
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape("sub", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& n) {
        if (auto* g = input_grad(n, 0)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
        }
        if (auto* g = input_grad(n, 1)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape("mul", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& n) {
        const auto& x = n.inputs[0]->value;
        const auto& y = n.inputs[1]->value;
        if (auto* g = input_grad(n, 0)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * y[i];
        }
        if (auto* g = input_grad(n, 1)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] * x[i];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_shape("div", a, b);
    std::vector<double> out(a.size());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / y[i];
    return make_result("div", a.shape(), std::move(out), {a, b}, [](Node& n) {
        const auto& y = n.inputs[1]->value;
        if (auto* g = input_grad(n, 0)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i] / y[i];
        }
        if (auto* g = input_grad(n, 1)) {
            // d(x/y)/dy = -(x/y)/y
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= n.grad[i] * n.value[i] / y[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    std::vector<double> out(a.size());
    auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
    return make_result("scale", a.shape(), std::move(out), {a}, [factor](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * factor;
    });
}

Tensor add_scalar(const Tensor& a, double value) {
    std::vector<double> out(a.size());
    auto x = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + value;
    return make_result("add_scalar", a.shape(), std::move(out), {a}, [](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    const std::size_t width = last_extent(a);
    if (a.rank() == 0 || row.size() != width) shape_error("add_row", a.shape(), row.shape());
    std::vector<double> out(a.size());
    auto x = a.data(), r = row.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + r[i % width];
    return make_result("add_row", a.shape(), std::move(out), {a, row}, [width](Node& n) {
        if (auto* g = input_grad(n, 0)) {
            for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += n.grad[i];
        }
        if (auto* g = input_grad(n, 1)) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*g)[i % width] += n.grad[i];
        }
    });
}

Tensor exp(const Tensor& x) {
    std::vector<double> out(x.size());
    auto v = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(v[i]);
    return make_result("exp", x.shape(), std::move(out), {x}, [](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * n.value[i];
    });
}

Tensor gelu(const Tensor& x) {
    // tanh approximation
    constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double kA = 0.044715;
    std::vector<double> out(x.size());
    auto v = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double u = v[i];
        out[i] = 0.5 * u * (1.0 + std::tanh(kC * (u + kA * u * u * u)));
    }
    return make_result("gelu", x.shape(), std::move(out), {x}, [](Node& n) {
        const auto& v = n.inputs[0]->value;
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double u = v[i];
            const double t = std::tanh(kC * (u + kA * u * u * u));
            const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * u * u);
            g[i] += n.grad[i] * (0.5 * (1.0 + t) + 0.5 * u * dt);
        }
    });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        shape_error("matmul", a.shape(), b.shape());
    }
    const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n);
    Map(out.data(), m, n).noalias() = MapC(a.data().data(), m, k) * MapC(b.data().data(), k, n);
    return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& node) {
        MapC g(node.grad.data(), m, n);
        if (auto* ga = input_grad(node, 0)) {
            Map(ga->data(), m, k).noalias() += g * MapC(node.inputs[1]->value.data(), k, n).transpose();
        }
        if (auto* gb = input_grad(node, 1)) {
            Map(gb->data(), k, n).noalias() += MapC(node.inputs[0]->value.data(), m, k).transpose() * g;
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank("transpose", a, 2);
    const auto m = a.dim(0), n = a.dim(1);
    std::vector<double> out(m * n);
    Map(out.data(), n, m) = MapC(a.data().data(), m, n).transpose();
    return make_result("transpose", {n, m}, std::move(out), {a}, [m, n](Node& node) {
        auto& g = *input_grad(node, 0);
        Map(g.data(), m, n) += MapC(node.grad.data(), n, m).transpose();
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        shape_error("bmm", a.shape(), b.shape());
    }
    const auto batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    std::vector<double> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i) {
        Map(out.data() + i * m * n, m, n).noalias() =
            MapC(a.data().data() + i * m * k, m, k) * MapC(b.data().data() + i * k * n, k, n);
    }
    return make_result("bmm", {batch, m, n}, std::move(out), {a, b}, [batch, m, k, n](Node& node) {
        auto* ga = input_grad(node, 0);
        auto* gb = input_grad(node, 1);
        const auto& av = node.inputs[0]->value;
        const auto& bv = node.inputs[1]->value;
        for (std::size_t i = 0; i < batch; ++i) {
            MapC g(node.grad.data() + i * m * n, m, n);
            if (ga) {
                Map(ga->data() + i * m * k, m, k).noalias() +=
                    g * MapC(bv.data() + i * k * n, k, n).transpose();
            }
            if (gb) {
                Map(gb->data() + i * k * n, k, n).noalias() +=
                    MapC(av.data() + i * m * k, m, k).transpose() * g;
            }
        }
    });
}

Tensor bmm_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2)) {
        shape_error("bmm_nt", a.shape(), b.shape());
    }
    const auto batch = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(1);
    std::vector<double> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i) {
        Map(out.data() + i * m * n, m, n).noalias() =
            MapC(a.data().data() + i * m * k, m, k) * MapC(b.data().data() + i * n * k, n, k).transpose();
    }
    return make_result("bmm_nt", {batch, m, n}, std::move(out), {a, b}, [batch, m, k, n](Node& node) {
        auto* ga = input_grad(node, 0);
        auto* gb = input_grad(node, 1);
        const auto& av = node.inputs[0]->value;
        const auto& bv = node.inputs[1]->value;
        for (std::size_t i = 0; i < batch; ++i) {
            MapC g(node.grad.data() + i * m * n, m, n);
            if (ga) {
                Map(ga->data() + i * m * k, m, k).noalias() += g * MapC(bv.data() + i * n * k, n, k);
            }
            if (gb) {
                Map(gb->data() + i * n * k, n, k).noalias() +=
                    g.transpose() * MapC(av.data() + i * m * k, m, k);
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Layout

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
    std::vector<double> out(a.data().begin(), a.data().end());
    return make_result("reshape", std::move(shape), std::move(out), {a}, [](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes) {
    const auto& in_shape = a.shape();
    const std::size_t rank = in_shape.size();
    std::vector<std::size_t> sorted = axes;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> identity(rank);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    if (sorted != identity) {
        throw DimensionError("permute: axes are not a permutation of " + shape_to_string(in_shape));
    }

    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = in_shape[axes[i]];
    std::vector<std::size_t> in_strides(rank, 1);
    for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];

    // source[i] is the input flat offset of output element i.
    const std::size_t total = a.size();
    std::vector<std::size_t> source(total);
    std::vector<std::size_t> index(rank, 0);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t offset = 0;
        for (std::size_t d = 0; d < rank; ++d) offset += index[d] * in_strides[axes[d]];
        source[i] = offset;
        for (std::size_t d = rank; d-- > 0;) {
            if (++index[d] < out_shape[d]) break;
            index[d] = 0;
        }
    }

    std::vector<double> out(total);
    auto x = a.data();
    for (std::size_t i = 0; i < total; ++i) out[i] = x[source[i]];
    return make_result("permute", std::move(out_shape), std::move(out), {a},
                       [source = std::move(source)](Node& n) {
                           auto& g = *input_grad(n, 0);
                           for (std::size_t i = 0; i < source.size(); ++i) g[source[i]] += n.grad[i];
                       });
}

Tensor slice_leading(const Tensor& a, std::size_t start, std::size_t count) {
    if (a.rank() == 0 || start + count > a.dim(0)) {
        throw DimensionError("slice_leading: rows [" + std::to_string(start) + "," +
                             std::to_string(start + count) + ") out of range for " +
                             shape_to_string(a.shape()));
    }
    const std::size_t stride = a.size() / a.dim(0);
    Shape shape = a.shape();
    shape[0] = count;
    auto x = a.data();
    std::vector<double> out(x.begin() + start * stride, x.begin() + (start + count) * stride);
    const std::size_t offset = start * stride;
    return make_result("slice_leading", std::move(shape), std::move(out), {a}, [offset](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < n.grad.size(); ++i) g[offset + i] += n.grad[i];
    });
}

// ---------------------------------------------------------------------------
// Normalizations

Tensor softmax_rows(const Tensor& x) {
    require_finite("softmax_rows", x.data());
    const std::size_t width = last_extent(x);
    const std::size_t rows = width == 0 ? 0 : x.size() / width;
    std::vector<double> out(x.size());
    auto v = x.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = v.data() + r * width;
        double* o = out.data() + r * width;
        const double top = *std::max_element(in, in + width);
        double total = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
            o[j] = std::exp(in[j] - top);
            total += o[j];
        }
        for (std::size_t j = 0; j < width; ++j) o[j] /= total;
    }
    return make_result("softmax_rows", x.shape(), std::move(out), {x}, [rows, width](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* s = n.value.data() + r * width;
            const double* gy = n.grad.data() + r * width;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) dot += gy[j] * s[j];
            for (std::size_t j = 0; j < width; ++j) g[r * width + j] += s[j] * (gy[j] - dot);
        }
    });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const std::size_t width = last_extent(x);
    if (x.rank() == 0 || gamma.size() != width || beta.size() != width) {
        shape_error("layer_norm_rows", x.shape(), gamma.shape());
    }
    const std::size_t rows = x.size() / width;
    std::vector<double> out(x.size());
    // normalized values and inverse std per row, kept for backward
    std::vector<double> xhat(x.size());
    std::vector<double> inv_std(rows);
    auto v = x.data();
    auto gm = gamma.data(), bt = beta.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = v.data() + r * width;
        double mu = 0.0;
        for (std::size_t j = 0; j < width; ++j) mu += in[j];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t j = 0; j < width; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<double>(width);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t j = 0; j < width; ++j) {
            const double h = (in[j] - mu) * is;
            xhat[r * width + j] = h;
            out[r * width + j] = h * gm[j] + bt[j];
        }
    }
    return make_result(
        "layer_norm_rows", x.shape(), std::move(out), {x, gamma, beta},
        [rows, width, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& n) {
            const auto& gm = n.inputs[1]->value;
            auto* gx = input_grad(n, 0);
            auto* gg = input_grad(n, 1);
            auto* gb = input_grad(n, 2);
            const double inv_w = 1.0 / static_cast<double>(width);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* gy = n.grad.data() + r * width;
                const double* h = xhat.data() + r * width;
                if (gg || gb) {
                    for (std::size_t j = 0; j < width; ++j) {
                        if (gg) (*gg)[j] += gy[j] * h[j];
                        if (gb) (*gb)[j] += gy[j];
                    }
                }
                if (gx) {
                    double mean_dh = 0.0, mean_dh_h = 0.0;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double dh = gy[j] * gm[j];
                        mean_dh += dh;
                        mean_dh_h += dh * h[j];
                    }
                    mean_dh *= inv_w;
                    mean_dh_h *= inv_w;
                    for (std::size_t j = 0; j < width; ++j) {
                        const double dh = gy[j] * gm[j];
                        (*gx)[r * width + j] += inv_std[r] * (dh - mean_dh - h[j] * mean_dh_h);
                    }
                }
            }
        });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return make_result("sum", Shape{}, {total}, {a}, [](Node& n) {
        auto& g = *input_grad(n, 0);
        const double gy = n.grad[0];
        for (auto& gi : g) gi += gy;
    });
}

Tensor mean(const Tensor& a) {
    if (a.size() == 0) throw DimensionError("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum_rows(const Tensor& a) {
    const std::size_t width = last_extent(a);
    if (a.rank() == 0) throw DimensionError("sum_rows: scalar input");
    const std::size_t rows = a.size() / width;
    std::vector<double> out(width, 0.0);
    auto v = a.data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < width; ++j) out[j] += v[r * width + j];
    }
    return make_result("sum_rows", Shape{width}, std::move(out), {a}, [width](Node& n) {
        auto& g = *input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i % width];
    });
}

double logsumexp(double beta, std::span<const double> x) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ParameterError("logsumexp: beta must be positive, got " + std::to_string(beta));
    }
    if (x.empty()) throw DimensionError("logsumexp: empty input");
    require_finite("logsumexp", x);
    const double top = *std::max_element(x.begin(), x.end());
    double total = 0.0;
    for (double v : x) total += std::exp(beta * (v - top));
    return top + std::log(total) / beta;
}

double logsumexp(double beta, const Tensor& x) { return logsumexp(beta, x.data()); }

Tensor lse(double beta, const Tensor& x) {
    const double value = logsumexp(beta, x.data());
    return make_result("lse", Shape{}, {value}, {x}, [beta](Node& n) {
        // d lse / d x_i = softmax(beta x)_i
        const auto& v = n.inputs[0]->value;
        auto& g = *input_grad(n, 0);
        const double top = n.value[0];
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * std::exp(beta * (v[i] - top));
    });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
    require_rank("cross_entropy", logits, 2);
    const auto rows = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != rows) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) +
                             " labels for logits " + shape_to_string(logits.shape()));
    }
    auto v = logits.data();
    double total = 0.0;
    std::vector<int> targets(labels.begin(), labels.end());
    for (std::size_t r = 0; r < rows; ++r) {
        if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= classes) {
            throw ParameterError("cross_entropy: label " + std::to_string(targets[r]) +
                                 " out of range");
        }
        const double* row = v.data() + r * classes;
        total += logsumexp(1.0, std::span<const double>(row, classes)) - row[targets[r]];
    }
    const double inv_rows = 1.0 / static_cast<double>(rows);
    return make_result("cross_entropy", Shape{}, {total * inv_rows}, {logits},
                       [rows, classes, inv_rows, targets = std::move(targets)](Node& n) {
                           const auto& v = n.inputs[0]->value;
                           auto& g = *input_grad(n, 0);
                           const double gy = n.grad[0] * inv_rows;
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* row = v.data() + r * classes;
                               const double lz =
                                   logsumexp(1.0, std::span<const double>(row, classes));
                               for (std::size_t c = 0; c < classes; ++c) {
                                   double p = std::exp(row[c] - lz);
                                   if (static_cast<int>(c) == targets[r]) p -= 1.0;
                                   g[r * classes + c] += gy * p;
                               }
                           }
                       });
}

}  // namespace damseg
