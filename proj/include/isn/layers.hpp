#pragma once

#include <array>
#include <string>

#include "isn/ops.hpp"
#include "isn/params.hpp"

namespace isn {

// Parameter declaration + forward helpers shared by the encoder/decoder
// modules. Paths follow "<prefix>/<leaf>" with the weight layouts of the ops
// layer; declares are idempotent (ParamStore::declare checks agreement).

void declare_conv(ParamStore& ps, const std::string& prefix, Shape w_shape, Rng& rng);
void declare_linear(ParamStore& ps, const std::string& prefix, int in_f, int out_f, Rng& rng);
void declare_bn(ParamStore& ps, const std::string& prefix, int channels);
void declare_prelu(ParamStore& ps, const std::string& prefix, double init_slope = 0.25);
void declare_ln(ParamStore& ps, const std::string& prefix, int channels);
void declare_se(ParamStore& ps, const std::string& prefix, int channels, int reduction,
                Rng& rng);

Tensor linear_p(GraphCtx& g, const std::string& prefix, const Tensor& x);
// Batch norm over all-but-channel; train mode reports current-tensor stats
// under `prefix` for the trainer's running update, eval mode reads the stored
// running statistics.
Tensor bn_p(GraphCtx& g, const std::string& prefix, const Tensor& x, double eps = 1e-5);
Tensor prelu_p(GraphCtx& g, const std::string& prefix, const Tensor& x);
Tensor ln_p(GraphCtx& g, const std::string& prefix, const Tensor& x, double eps = 1e-5);
// Squeeze-and-excitation: mean over `squeeze_axes`, bottleneck MLP, sigmoid
// gate scaling the input. Gate values lie strictly in (0,1).
Tensor se_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
            const std::vector<int>& squeeze_axes);

Tensor conv1d_p(GraphCtx& g, const std::string& prefix, const Tensor& x, int stride,
                int dilation, int pad);
Tensor conv2d_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
                std::array<int, 2> stride, std::array<int, 2> pad);
Tensor conv3d_p(GraphCtx& g, const std::string& prefix, const Tensor& x,
                std::array<int, 3> stride, std::array<int, 3> pad);

// Same-length padding for odd kernels under the given dilation.
inline int same_pad(int kernel, int dilation = 1) { return dilation * (kernel - 1) / 2; }

}  // namespace isn
