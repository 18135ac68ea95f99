#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "autodiff/tensor.hpp"

namespace ffae::ad {

struct Node {
    Tensor value;
    Tensor grad;  // empty until the backward pass reaches this node
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward_fn;
    bool requires_grad = false;
    const char* op = "leaf";

    Tensor& ensure_grad();
};

// Handle to a node of the computation graph. Copies share the node, so one
// parameter referenced from several graph sites accumulates all path gradients.
class Value {
public:
    Value() = default;
    explicit Value(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    bool defined() const noexcept { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& mutable_grad() { return node_->ensure_grad(); }
    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_->requires_grad; }
    const char* op() const { return node_->op; }

    double item() const;  // value of a 1 x 1 tensor

    // Reverse-mode sweep from a scalar. Intermediate gradients are reset
    // first; leaf gradients accumulate until zero_grad().
    void backward() const;
    void zero_grad();

    Node* node() const noexcept { return node_.get(); }
    const std::shared_ptr<Node>& shared() const noexcept { return node_; }
    bool same_node(const Value& other) const noexcept { return node_ == other.node_; }

private:
    std::shared_ptr<Node> node_;
};

Value parameter(Tensor t);
Value constant(Tensor t);

// Builds a non-leaf node. requires_grad is inherited from the inputs.
Value make_result(Tensor value, std::vector<Value> inputs, const char* op,
                  std::function<void(Node&)> backward_fn);

}  // namespace ffae::ad
