#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "isn/tensor.hpp"

namespace isn {

// Attribute bag for the generic forward_op entry point.
using AttrValue =
    std::variant<int64_t, double, bool, std::string, std::vector<int>, std::vector<double>>;

struct OpAttrs {
    std::map<std::string, AttrValue> values;

    template <typename T>
    T get(const std::string& key, T fallback) const {
        auto it = values.find(key);
        if (it == values.end()) return fallback;
        return std::get<T>(it->second);
    }
    template <typename T>
    OpAttrs& set(const std::string& key, T v) {
        values[key] = AttrValue(std::move(v));
        return *this;
    }
};

namespace ops {

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// slope is a learnable tensor of one element shared across the input
Tensor prelu(const Tensor& x, const Tensor& slope);

// ---- shape / reduction ----
Tensor concat_last(const std::vector<Tensor>& parts);
Tensor slice_last(const Tensor& x, int start, int len);
// Mean over the given axes (result drops them). The per-element reduction
// sorts its operands first, so the result is bit-identical under any
// permutation of the reduced positions.
Tensor mean_axes(const Tensor& x, std::vector<int> axes);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
// x: [n,in] or [in]; w: [in,out]; b: [out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- normalization / activation over rows ----
Tensor softmax_last(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

struct BnStats {
    std::vector<double> mean;  // per channel, biased var
    std::vector<double> var;
    int64_t group = 0;  // positions averaged per channel
};
// Normalizes over every axis except the last (channel) axis.
Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        BnStats* stats_out);
Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       const std::vector<double>& running_mean,
                       const std::vector<double>& running_var, double eps);

// ---- channel gating (squeeze-and-excitation apply step) ----
// gate shape [C]: scales channel c everywhere. gate shape [T,C] against
// x [T,...,C]: scales per leading index and channel.
Tensor scale_by_gate(const Tensor& x, const Tensor& gate);

// ---- convolution (channel-last layouts) ----
// x: [T,Cin], w: [k,Cin,Cout], b: [Cout]; zero padding, cross-correlation.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int dilation,
              int pad);
// x: [N,H,W,Cin] applied per leading index; w: [kh,kw,Cin,Cout]
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::array<int, 2> stride,
              std::array<int, 2> pad);
// x: [T,H,W,Cin]; w: [kt,kh,kw,Cin,Cout]
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, std::array<int, 3> stride,
              std::array<int, 3> pad);
// x: [T,H,W,C]
Tensor maxpool3d(const Tensor& x, std::array<int, 3> kernel, std::array<int, 3> stride,
                 std::array<int, 3> pad);

// Direct-loop reference convolution; shares no code with the im2col path.
// rank = spatial dims (1..3). Shapes as the ops above with conv2d's leading
// axis treated as batch.
std::vector<double> conv_oracle(int rank, const Shape& x_shape, const std::vector<double>& x,
                                const Shape& w_shape, const std::vector<double>& w,
                                const std::vector<double>& bias, const std::vector<int>& stride,
                                const std::vector<int>& dilation, const std::vector<int>& pad,
                                Shape* out_shape = nullptr);

// ---- loss ----
// logits: [N] or [1,N]; q: probability vector of length N. Stable
// log-sum-exp evaluation; gradient w.r.t. logits is softmax(logits) - q.
Tensor cross_entropy_logits(const Tensor& logits, const std::vector<double>& q);

}  // namespace ops

// ---- generic dispatch ----
Tensor forward_op(const std::string& op_id, const std::vector<Tensor>& inputs,
                  const OpAttrs& attrs);
bool op_registered(const std::string& op_id);
std::vector<std::string> registered_ops();
// Test hook: register or replace an entry (used to inject faulty rules).
using OpFn = std::function<Tensor(const std::vector<Tensor>&, const OpAttrs&)>;
void register_op(const std::string& op_id, OpFn fn);

}  // namespace isn
