#pragma once

#include <array>
#include <string>
#include <vector>

#include "isn/layers.hpp"

namespace isn {

// Spatiotemporal encoder: 3D conv stem, spatial max-pool, SE-augmented
// residual stages applied per frame, spatial global average pooling.
// Maps [T,H,W,1] video to [T,C2] frame features; T is never changed.
struct FrontendConfig {
    int stem_channels = 16;  // C1
    std::array<int, 3> stem_kernel = {5, 7, 7};
    std::array<int, 3> stem_stride = {1, 2, 2};
    std::array<int, 3> pool_kernel = {1, 3, 3};
    std::array<int, 3> pool_stride = {1, 2, 2};
    std::vector<int> stage_channels = {16, 32, 48, 64};
    int blocks_per_stage = 2;
    int se_reduction = 4;

    int out_channels() const { return stage_channels.back(); }  // C2
    void validate() const;  // throws ConfigError
};

void frontend_declare(ParamStore& ps, const std::string& prefix, const FrontendConfig& cfg,
                      Rng& rng);

// x: [T,H,W,1] -> [T,C2]. The boundary mask is not consumed here; it rides
// alongside and joins the features after the attention module.
Tensor frontend_forward(GraphCtx& g, const std::string& prefix, const FrontendConfig& cfg,
                        const Tensor& x);

}  // namespace isn
