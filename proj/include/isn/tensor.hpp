#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "isn/errors.hpp"

namespace isn {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(Node&)>;

// One vertex of the differentiation record. `value` is always materialized
// (eager evaluation); `grad` is allocated lazily during backward.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<NodePtr> inputs;
    BackwardFn backward;  // null for leaves
    std::string op;       // operator id, empty for leaves
    std::string name;     // parameter path for named leaves
    bool requires_grad = false;
    bool trainable = false;
    int mark = 0;  // traversal state, owned by Tensor::backward

    int64_t numel() const { return shape_numel(shape); }
    std::vector<double>& grad_buf() {
        if (grad.empty()) grad.assign(static_cast<size_t>(numel()), 0.0);
        return grad;
    }
};

using GradMap = std::map<std::string, std::vector<double>>;

// Value-semantics handle to a graph node. Tensors are immutable once they
// participate in an op; all operators allocate fresh output nodes.
class Tensor {
  public:
    Tensor() = default;

    static Tensor leaf(Shape shape, std::vector<double> data, bool trainable = false,
                       std::string name = {});
    static Tensor constant(Shape shape, std::vector<double> data) {
        return leaf(std::move(shape), std::move(data), false);
    }
    static Tensor scalar(double v) { return leaf(Shape{1}, {v}, false); }
    static Tensor zeros(Shape shape, bool trainable = false, std::string name = {});

    // Used by operator implementations.
    static Tensor make_op(std::string op, Shape out_shape, std::vector<Tensor> inputs,
                          BackwardFn backward);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int64_t size() const { return node_->numel(); }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }

    const std::vector<double>& data() const { return node_->value; }
    std::vector<double>& raw_data() { return node_->value; }  // leaves only, before use
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    bool trainable() const { return node_->trainable; }
    const std::string& name() const { return node_->name; }
    const std::string& op() const { return node_->op; }
    bool has_grad() const { return !node_->grad.empty(); }
    const std::vector<double>& grad() const;

    NodePtr node() const { return node_; }

    // Reverse-mode sweep from a scalar loss. Returns the gradient keyed by
    // parameter path for every named trainable leaf reachable from the loss.
    GradMap backward() const;

  private:
    explicit Tensor(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

}  // namespace isn
