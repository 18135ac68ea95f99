#include "autodiff/value.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ffae::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
    if (data_.size() != rows * cols) {
        std::ostringstream msg;
        msg << "Tensor: " << data_.size() << " values do not fill [" << rows << " x " << cols << "]";
        throw std::invalid_argument(msg.str());
    }
}

Tensor Tensor::row_vector(std::initializer_list<double> values) {
    return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

std::string Tensor::shape_string() const {
    std::ostringstream out;
    out << "[" << rows_ << " x " << cols_ << "]";
    return out.str();
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Node::ensure_grad() {
    if (!grad.same_shape(value)) grad = Tensor(value.rows(), value.cols());
    return grad;
}

double Value::item() const {
    if (node_->value.rows() != 1 || node_->value.cols() != 1)
        throw std::invalid_argument("Value::item: expected a scalar, got " + node_->value.shape_string());
    return node_->value[0];
}

void Value::backward() const {
    if (node_->value.size() != 1)
        throw std::invalid_argument("backward: root must be a scalar, got " + node_->value.shape_string());

    // Iterative post-order DFS gives a topological order (inputs first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            Node* child = n->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order)
        if (n->backward_fn) n->ensure_grad().fill(0.0);
    node_->ensure_grad()[0] = 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

void Value::zero_grad() {
    if (!node_->grad.empty()) node_->grad.fill(0.0);
}

Value parameter(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    node->requires_grad = true;
    node->op = "parameter";
    return Value(std::move(node));
}

Value constant(Tensor t) {
    auto node = std::make_shared<Node>();
    node->value = std::move(t);
    node->op = "constant";
    return Value(std::move(node));
}

Value make_result(Tensor value, std::vector<Value> inputs, const char* op,
                  std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) {
        node->requires_grad = node->requires_grad || in.requires_grad();
        node->inputs.push_back(in.shared());
    }
    if (node->requires_grad) node->backward_fn = std::move(backward_fn);
    return Value(std::move(node));
}

}  // namespace ffae::ad
