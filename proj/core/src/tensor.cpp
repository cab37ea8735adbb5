#include "damseg/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "damseg/errors.hpp"

namespace damseg {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto extent : shape) n *= extent;
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::vector<double>& detail::Node::grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

namespace {

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor: shape " + shape_to_string(shape) + " holds " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return node;
}

const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
    if (!node) throw ContractError("tensor: use of an undefined tensor");
    return *node;
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) {
    const auto n = shape_numel(shape);
    node_ = make_leaf(std::move(shape), std::vector<double>(n, fill));
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : node_(make_leaf(std::move(shape), std::move(values))) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::vector(std::vector<double> values) {
    const auto n = values.size();
    return Tensor(Shape{n}, std::move(values));
}

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) {
        throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for " +
                             shape_to_string(s));
    }
    return s[axis];
}

std::size_t Tensor::size() const { return checked(node_).value.size(); }

std::span<const double> Tensor::data() const { return checked(node_).value; }

std::span<double> Tensor::data_mut() {
    checked(node_);
    return node_->value;
}

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("tensor: item() on tensor of shape " + shape_to_string(shape()));
    }
    return node_->value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
    const auto& s = shape();
    if (s.size() != 2 || row >= s[0] || col >= s[1]) {
        throw DimensionError("tensor: index (" + std::to_string(row) + "," + std::to_string(col) +
                             ") invalid for " + shape_to_string(s));
    }
    return node_->value[row * s[1] + col];
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
    checked(node_);
    node_->requires_grad = flag;
    if (flag) node_->grad_buffer();
    return *this;
}

std::span<const double> Tensor::grad() const {
    checked(node_);
    return node_->grad_buffer();
}

void Tensor::zero_grad() {
    checked(node_);
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    const auto& n = checked(node_);
    return Tensor(n.shape, n.value);
}

const char* Tensor::op_name() const { return checked(node_).op; }

GradGraph GradGraph::trace(const Tensor& root) {
    GradGraph graph;
    graph.root_ = root.node();
    if (!graph.root_) throw ContractError("backward: undefined root");

    // Iterative post-order DFS gives a topological order.
    std::unordered_set<const detail::Node*> visited;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(graph.root_.get(), 0);
    visited.insert(graph.root_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            detail::Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
        } else {
            graph.order_.push_back(node);
            stack.pop_back();
        }
    }
    return graph;
}

void GradGraph::backward() {
    if (order_.empty()) return;
    for (auto* node : order_) {
        if (!node->is_leaf()) node->grad.assign(node->value.size(), 0.0);
    }
    auto* root = order_.back();
    if (!root->requires_grad) return;
    root->grad_buffer()[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        detail::Node* node = *it;
        if (node->is_leaf() || !node->backward) continue;
        node->backward(*node);
    }
    for (auto* node : order_) {
        if (!node->is_leaf()) {
            node->grad.clear();
            node->grad.shrink_to_fit();
        }
    }
}

void backward(const Tensor& root) {
    if (root.size() != 1) {
        throw ContractError("backward: root must be a scalar, got shape " +
                            shape_to_string(root.shape()));
    }
    GradGraph::trace(root).backward();
}

}  // namespace damseg
