#include <algorithm>

#include "isn/layers.hpp"

namespace isn {

namespace {

int conv_fan_in(const Shape& w_shape) {
    // [k..., cin, cout]: taps * cin
    int fan = 1;
    for (size_t i = 0; i + 1 < w_shape.size(); ++i) fan *= w_shape[i];
    return fan;
}

}  // namespace

void declare_conv(ParamStore& ps, const std::string& prefix, Shape w_shape, Rng& rng) {
    int fan = conv_fan_in(w_shape);
    int cout = w_shape.back();
    init_uniform_fan(ps.declare(prefix + "/w", w_shape), fan, rng);
    init_uniform_fan(ps.declare(prefix + "/b", {cout}), fan, rng);
}

void declare_linear(ParamStore& ps, const std::string& prefix, int in_f, int out_f, Rng& rng) {
    init_uniform_fan(ps.declare(prefix + "/w", {in_f, out_f}), in_f, rng);
    init_uniform_fan(ps.declare(prefix + "/b", {out_f}), in_f, rng);
}

void declare_bn(ParamStore& ps, const std::string& prefix, int channels) {
    init_constant(ps.declare(prefix + "/gamma", {channels}), 1.0);
    init_constant(ps.declare(prefix + "/beta", {channels}), 0.0);
    init_constant(ps.declare(prefix + "/running_mean", {channels}, /*trainable=*/false), 0.0);
    init_constant(ps.declare(prefix + "/running_var", {channels}, /*trainable=*/false), 1.0);
}

void declare_prelu(ParamStore& ps, const std::string& prefix, double init_slope) {
    init_constant(ps.declare(prefix + "/a", {1}), init_slope);
}

void declare_ln(ParamStore& ps, const std::string& prefix, int channels) {
    init_constant(ps.declare(prefix + "/gamma", {channels}), 1.0);
    init_constant(ps.declare(prefix + "/beta", {channels}), 0.0);
}

void declare_se(ParamStore& ps, const std::string& prefix, int channels, int reduction,
                Rng& rng) {
    int mid = std::max(1, channels / reduction);
    declare_linear(ps, prefix + "/fc1", channels, mid, rng);
    declare_linear(ps, prefix + "/fc2", mid, channels, rng);
}

Tensor linear_p(GraphCtx& g, const std::string& prefix, const Tensor& x) {
    return ops::linear(x, g.param(prefix + "/w"), g.param(prefix + "/b"));
}

namespace {

// Per-channel mean and biased variance of x over rows = numel / C.
ops::BnStats input_stats(const Tensor& x) {
    int C = x.dim(x.rank() - 1);
    int64_t rows = x.size() / C;
    ops::BnStats st;
    st.mean.assign(static_cast<size_t>(C), 0.0);
    st.var.assign(static_cast<size_t>(C), 0.0);
    st.group = rows;
    const auto& xv = x.data();
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * C;
        for (int c = 0; c < C; ++c) st.mean[static_cast<size_t>(c)] += row[c];
    }
    for (int c = 0; c < C; ++c) st.mean[static_cast<size_t>(c)] /= static_cast<double>(rows);
    for (int64_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * C;
        for (int c = 0; c < C; ++c) {
            double d = row[c] - st.mean[static_cast<size_t>(c)];
            st.var[static_cast<size_t>(c)] += d * d;
        }
    }
    for (int c = 0; c < C; ++c) st.var[static_cast<size_t>(c)] /= static_cast<double>(rows);
    return st;
}

}  // namespace

Tensor bn_p(GraphCtx& g, const std::string& prefix, const Tensor& x, double eps) {
    Tensor gamma = g.param(prefix + "/gamma");
    Tensor beta = g.param(prefix + "/beta");
    if (g.train()) {
        // With pooled stats installed (the trainer's gradient pass), normalize
        // by the batch statistics gathered in the preceding stats pass; they
        // act as constants in the gradient. Either way, report this graph's
        // input statistics so the trainer can pool them.
        if (const ops::BnStats* pooled = g.pooled_bn(prefix)) {
            g.report_bn(prefix, input_stats(x));
            return ops::batch_norm_eval(x, gamma, beta, pooled->mean, pooled->var, eps);
        }
        ops::BnStats st;
        Tensor y = ops::batch_norm_train(x, gamma, beta, eps, &st);
        g.report_bn(prefix, st);
        return y;
    }
    return ops::batch_norm_eval(x, gamma, beta, g.stat(prefix + "/running_mean"),
                                g.stat(prefix + "/running_var"), eps);
}

Tensor prelu_p(GraphCtx& g, const std::string& prefix, const Tensor& x) {
    return ops::prelu(x, g.param(prefix + "/a"));
}

Tensor ln_p(GraphCtx& g, const std::string& prefix, const Tensor& x, double eps) {
    return ops::layer_norm(x, g.param(prefix + "/gamma"), g.param(prefix + "/beta"), eps);
}

Tensor se_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
            const std::vector<int>& squeeze_axes) {
    Tensor s = ops::mean_axes(x, squeeze_axes);
    Tensor h = ops::relu(linear_p(g, prefix + "/fc1", s));
    Tensor gate = ops::sigmoid(linear_p(g, prefix + "/fc2", h));
    return ops::scale_by_gate(x, gate);
}

Tensor conv1d_p(GraphCtx& g, const std::string& prefix, const Tensor& x, int stride,
                int dilation, int pad) {
    return ops::conv1d(x, g.param(prefix + "/w"), g.param(prefix + "/b"), stride, dilation, pad);
}

Tensor conv2d_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
                std::array<int, 2> stride, std::array<int, 2> pad) {
    return ops::conv2d(x, g.param(prefix + "/w"), g.param(prefix + "/b"), stride, pad);
}

Tensor conv3d_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
                std::array<int, 3> stride, std::array<int, 3> pad) {
    return ops::conv3d(x, g.param(prefix + "/w"), g.param(prefix + "/b"), stride, pad);
}

}  // namespace isn
