#include <mutex>

#include "isn/ops.hpp"

namespace isn {

namespace {

std::array<int, 2> pair_of(const std::vector<int>& v, const char* what) {
    if (v.size() != 2) throw ShapeError(std::string(what) + " must have 2 entries");
    return {v[0], v[1]};
}

std::array<int, 3> triple_of(const std::vector<int>& v, const char* what) {
    if (v.size() != 3) throw ShapeError(std::string(what) + " must have 3 entries");
    return {v[0], v[1], v[2]};
}

const Tensor& arg(const std::vector<Tensor>& in, size_t i, const char* op) {
    if (i >= in.size())
        throw ShapeError(std::string(op) + ": expects at least " + std::to_string(i + 1) +
                         " inputs, got " + std::to_string(in.size()));
    return in[i];
}

std::map<std::string, OpFn>& registry() {
    static std::map<std::string, OpFn> reg = [] {
        using namespace ops;
        std::map<std::string, OpFn> r;
        r["add"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return add(arg(in, 0, "add"), arg(in, 1, "add"));
        };
        r["elementwise-multiply"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return mul(arg(in, 0, "elementwise-multiply"), arg(in, 1, "elementwise-multiply"));
        };
        r["scale-by-constant"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return scale(arg(in, 0, "scale-by-constant"), a.get<double>("c", 1.0));
        };
        r["relu"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return relu(arg(in, 0, "relu"));
        };
        r["sigmoid"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return sigmoid(arg(in, 0, "sigmoid"));
        };
        r["prelu"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return prelu(arg(in, 0, "prelu"), arg(in, 1, "prelu"));
        };
        r["concat-on-channel"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return concat_last(in);
        };
        r["slice-on-channel"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return slice_last(arg(in, 0, "slice-on-channel"),
                              static_cast<int>(a.get<int64_t>("start", 0)),
                              static_cast<int>(a.get<int64_t>("len", 1)));
        };
        r["mean-over-axes"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return mean_axes(arg(in, 0, "mean-over-axes"),
                             a.get<std::vector<int>>("axes", {0}));
        };
        r["matmul"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return matmul(arg(in, 0, "matmul"), arg(in, 1, "matmul"),
                          a.get<bool>("trans_a", false), a.get<bool>("trans_b", false));
        };
        r["linear"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return linear(arg(in, 0, "linear"), arg(in, 1, "linear"), arg(in, 2, "linear"));
        };
        r["softmax"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return softmax_last(arg(in, 0, "softmax"));
        };
        r["layer-norm"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return layer_norm(arg(in, 0, "layer-norm"), arg(in, 1, "layer-norm"),
                              arg(in, 2, "layer-norm"), a.get<double>("eps", 1e-5));
        };
        r["batch-norm"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return batch_norm_train(arg(in, 0, "batch-norm"), arg(in, 1, "batch-norm"),
                                    arg(in, 2, "batch-norm"), a.get<double>("eps", 1e-5),
                                    nullptr);
        };
        r["batch-norm-eval"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            const Tensor& x = arg(in, 0, "batch-norm-eval");
            int C = x.dim(x.rank() - 1);
            std::vector<double> ones(static_cast<size_t>(C), 1.0);
            std::vector<double> zeros(static_cast<size_t>(C), 0.0);
            return batch_norm_eval(x, arg(in, 1, "batch-norm-eval"),
                                   arg(in, 2, "batch-norm-eval"),
                                   a.get<std::vector<double>>("running_mean", zeros),
                                   a.get<std::vector<double>>("running_var", ones),
                                   a.get<double>("eps", 1e-5));
        };
        r["scale-by-gate"] = [](const std::vector<Tensor>& in, const OpAttrs&) {
            return scale_by_gate(arg(in, 0, "scale-by-gate"), arg(in, 1, "scale-by-gate"));
        };
        r["conv1d"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return conv1d(arg(in, 0, "conv1d"), arg(in, 1, "conv1d"), arg(in, 2, "conv1d"),
                          static_cast<int>(a.get<int64_t>("stride", 1)),
                          static_cast<int>(a.get<int64_t>("dilation", 1)),
                          static_cast<int>(a.get<int64_t>("pad", 0)));
        };
        r["conv2d"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return conv2d(arg(in, 0, "conv2d"), arg(in, 1, "conv2d"), arg(in, 2, "conv2d"),
                          pair_of(a.get<std::vector<int>>("stride", {1, 1}), "conv2d stride"),
                          pair_of(a.get<std::vector<int>>("pad", {0, 0}), "conv2d pad"));
        };
        r["conv3d"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return conv3d(
                arg(in, 0, "conv3d"), arg(in, 1, "conv3d"), arg(in, 2, "conv3d"),
                triple_of(a.get<std::vector<int>>("stride", {1, 1, 1}), "conv3d stride"),
                triple_of(a.get<std::vector<int>>("pad", {0, 0, 0}), "conv3d pad"));
        };
        r["maxpool3d"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            return maxpool3d(
                arg(in, 0, "maxpool3d"),
                triple_of(a.get<std::vector<int>>("kernel", {1, 1, 1}), "maxpool3d kernel"),
                triple_of(a.get<std::vector<int>>("stride", {1, 1, 1}), "maxpool3d stride"),
                triple_of(a.get<std::vector<int>>("pad", {0, 0, 0}), "maxpool3d pad"));
        };
        r["cross-entropy"] = [](const std::vector<Tensor>& in, const OpAttrs& a) {
            const Tensor& z = arg(in, 0, "cross-entropy");
            std::vector<double> uniform(static_cast<size_t>(z.size()),
                                        1.0 / static_cast<double>(z.size()));
            return cross_entropy_logits(z, a.get<std::vector<double>>("q", uniform));
        };
        return r;
    }();
    return reg;
}

}  // namespace

Tensor forward_op(const std::string& op_id, const std::vector<Tensor>& inputs,
                  const OpAttrs& attrs) {
    auto& reg = registry();
    auto it = reg.find(op_id);
    if (it == reg.end()) throw ShapeError("forward_op: unknown op '" + op_id + "'");
    return it->second(inputs, attrs);
}

bool op_registered(const std::string& op_id) { return registry().count(op_id) != 0; }

std::vector<std::string> registered_ops() {
    std::vector<std::string> out;
    for (const auto& [k, v] : registry()) out.push_back(k);
    return out;
}

void register_op(const std::string& op_id, OpFn fn) { registry()[op_id] = std::move(fn); }

}  // namespace isn
