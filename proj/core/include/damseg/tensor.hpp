#pragma once

// Dense float64 tensors with a tape-free reverse-mode differentiation graph.
//
// A Tensor is a shared handle to a graph node. Ops whose inputs require
// gradients record their inputs and a backward closure on the output node;
// ops over constant inputs produce plain values with no graph attached.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace damseg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    // Reads this node's grad and accumulates into inputs' grads.
    std::function<void(Node&)> backward;

    bool is_leaf() const { return inputs.empty(); }
    std::vector<double>& grad_buffer();
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor vector(std::vector<double> values);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const;

    std::span<const double> data() const;
    /// Mutable view of the values; intended for leaves (parameters, inputs).
    std::span<double> data_mut();
    double item() const;
    double at(std::size_t flat) const { return data()[flat]; }
    double at(std::size_t row, std::size_t col) const;

    bool requires_grad() const;
    Tensor& set_requires_grad(bool flag = true);
    /// Gradient buffer; zeros if nothing has been accumulated yet.
    std::span<const double> grad() const;
    void zero_grad();

    /// Copy of the values with no graph history.
    Tensor detach() const;
    Tensor clone() const { return detach(); }

    /// Identity of the underlying node; stable for the handle's lifetime.
    const void* id() const { return node_.get(); }
    const char* op_name() const;

    // Internal: used by ops and the graph.
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    const std::shared_ptr<detail::Node>& node() const { return node_; }

private:
    std::shared_ptr<detail::Node> node_;
};

/// Topologically ordered record of every node reachable from a root.
class GradGraph {
public:
    static GradGraph trace(const Tensor& root);

    std::size_t size() const { return order_.size(); }
    /// Nodes in topological order: every node's inputs precede it.
    const std::vector<detail::Node*>& order() const { return order_; }

    /// Runs the reverse sweep, visiting each node once. Leaf gradients
    /// accumulate; interior gradients are scratch and released afterwards.
    void backward();

private:
    std::vector<detail::Node*> order_;
    std::shared_ptr<detail::Node> root_;
};

/// Populates grad of every requires_grad leaf with d(root)/d(leaf).
/// Throws ContractError if root is not a scalar.
void backward(const Tensor& root);

// ---------------------------------------------------------------------------
// Differentiable ops. All shape checks throw DimensionError naming both
// shapes; a non-finite result throws NumericError naming the op.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
/// a[..., N] + row[N], broadcast over every leading index.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Batched a[B,M,K] x b[B,K,N].
Tensor bmm(const Tensor& a, const Tensor& b);
/// Batched a[B,M,K] x b[B,N,K]^T.
Tensor bmm_nt(const Tensor& a, const Tensor& b);

Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);
/// Rows [start, start + count) along the leading axis.
Tensor slice_leading(const Tensor& a, std::size_t start, std::size_t count);

/// Softmax over the last axis, max-shifted per row.
Tensor softmax_rows(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Sum over the leading axes of a[..., N]; result has shape [N].
Tensor sum_rows(const Tensor& a);
/// beta^-1 log sum_i exp(beta x_i) over all entries, as a scalar node.
Tensor lse(double beta, const Tensor& x);
/// Mean cross-entropy of logits[M, C] against integer labels.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Plain numeric helpers.

/// beta^-1 log sum_i exp(beta x_i); throws ParameterError for beta <= 0.
double logsumexp(double beta, std::span<const double> x);
double logsumexp(double beta, const Tensor& x);

}  // namespace damseg
