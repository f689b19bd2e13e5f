#pragma once

#include <array>
#include <string>
#include <vector>

#include "isn/layers.hpp"

namespace isn {

// Temporal decoder: alternating kernel-1 transition layers and SE-gated dense
// blocks on [T,C] features, then temporal GAP and a linear classifier.
// Every dense layer concatenates two dilated conv branches (growth channels
// each) with its input, so one block adds 2*growth*layers_per_block channels.
struct DctcnConfig {
    int num_blocks = 4;
    int layers_per_block = 3;
    int growth = 16;  // C0
    int width = 64;   // C2: transition target width
    std::array<int, 2> branch_kernels = {3, 5};
    std::vector<int> dilations = {1, 2, 4};  // one per dense layer in a block
    int classes = 10;                        // C4
    int se_reduction = 4;

    int block_gain() const { return 2 * growth * layers_per_block; }
    int out_width() const { return width + block_gain(); }  // C3
    void validate() const;                                  // throws ConfigError
};

// in_width: C2 or C2+1 when the word-boundary channel rides along; the first
// transition absorbs it.
void dctcn_declare(ParamStore& ps, const std::string& prefix, const DctcnConfig& cfg,
                   int in_width, Rng& rng);

// x: [T,in_width] -> [T,C3]
Tensor dctcn_forward(GraphCtx& g, const std::string& prefix, const DctcnConfig& cfg,
                     const Tensor& x);

// Individual pieces, exposed for direct property testing. Prefixes must match
// what dctcn_declare laid out ("<prefix>/tr<i>", "<prefix>/db<b>/layer<l>").
Tensor dctcn_transition(GraphCtx& g, const std::string& tp, const Tensor& x);
// concat(TC_a(SE(x)), TC_b(SE(x)), x): branches first, raw input verbatim in
// the trailing channels.
Tensor dctcn_dense_layer(GraphCtx& g, const std::string& lp, const DctcnConfig& cfg,
                         const Tensor& x, int dilation);

void classifier_declare(ParamStore& ps, const std::string& prefix, const DctcnConfig& cfg,
                        Rng& rng);

// G: [T,C3] -> logits [C4]; temporal mean then linear, softmax lives in the
// loss. Bit-invariant under temporal permutation of G.
Tensor classify_forward(GraphCtx& g, const std::string& prefix, const DctcnConfig& cfg,
                        const Tensor& feat);

}  // namespace isn
