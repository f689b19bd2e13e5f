#include "isn/tensor.hpp"

#include <sstream>

namespace isn {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool trainable, std::string name) {
    for (int d : shape) {
        if (d <= 0) throw ShapeError("leaf: non-positive extent in shape " + shape_str(shape));
    }
    if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
        throw ShapeError("leaf: shape " + shape_str(shape) + " does not match buffer length " +
                         std::to_string(data.size()));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->trainable = trainable;
    n->requires_grad = trainable;
    n->name = std::move(name);
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool trainable, std::string name) {
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)), 0.0);
    return leaf(std::move(shape), std::move(v), trainable, std::move(name));
}

Tensor Tensor::make_op(std::string op, Shape out_shape, std::vector<Tensor> inputs,
                       BackwardFn backward) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(out_shape);
    n->value.resize(static_cast<size_t>(n->numel()));
    n->op = std::move(op);
    n->backward = std::move(backward);
    n->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) {
        if (!t.defined()) throw ShapeError(n->op + ": undefined input tensor");
        n->requires_grad = n->requires_grad || t.requires_grad();
        n->inputs.push_back(t.node());
    }
    return Tensor(std::move(n));
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item: tensor " + shape_str(shape()) + " is not scalar");
    return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
    if (node_->grad.empty())
        throw std::runtime_error("grad: no gradient present (backward not run?)");
    return node_->grad;
}

GradMap Tensor::backward() const {
    if (!defined()) throw std::runtime_error("backward: undefined tensor");
    if (size() != 1)
        throw NumericError("backward: loss must be scalar, got shape " + shape_str(shape()));

    // Iterative post-order DFS. mark: 0 unvisited, 1 on stack, 2 done.
    std::vector<Node*> order;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    node_->mark = 1;
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->inputs.size()) {
            Node* child = n->inputs[idx++].get();
            if (!child->requires_grad) continue;
            if (child->mark == 1)
                throw std::runtime_error("backward: cycle detected in op graph at '" +
                                         (child->op.empty() ? child->name : child->op) + "'");
            if (child->mark == 2) continue;
            child->mark = 1;
            stack.emplace_back(child, 0);
        } else {
            n->mark = 2;
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        n->grad.clear();
        n->mark = 0;
    }
    node_->grad_buf()[0] = 1.0;

    GradMap grads;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
        if (n->trainable && !n->name.empty()) {
            auto [pos, fresh] = grads.emplace(n->name, n->grad_buf());
            if (!fresh)
                throw std::runtime_error("backward: duplicate trainable leaf name '" + n->name +
                                         "'");
        }
    }
    return grads;
}

}  // namespace isn
