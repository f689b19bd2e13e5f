#pragma once

#include <string>
#include <vector>

#include "isn/layers.hpp"

namespace isn {

// Pre-norm Transformer encoder stack operating on [T,d_model] frame features.
// With positional encoding off (the default) the stack is permutation
// equivariant; temporal order is recovered downstream by the decoder.
struct AttentionConfig {
    int layers = 6;  // L; 0 bypasses the module entirely (ablation baseline)
    int heads = 4;   // h
    int d_model = 64;
    int d_ff = 256;
    bool positional_encoding = false;

    int d_k() const { return d_model / heads; }
    void validate() const;  // throws ConfigError
};

// Post-softmax attention matrices captured per layer: h per-head T x T
// matrices plus their head average, row-major, detached from the graph.
struct AttentionTrace {
    struct Layer {
        std::vector<std::vector<double>> head;  // heads entries of T*T values
        std::vector<double> head_avg;           // T*T
    };
    int T = 0;
    std::vector<Layer> layers;
};

void attention_declare(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                       Rng& rng);

// x: [T,d_model] -> [T,d_model]. Pass `trace` to capture attention matrices
// (costs h*L T x T buffers; leave null during training).
Tensor attention_forward(GraphCtx& g, const std::string& prefix, const AttentionConfig& cfg,
                         const Tensor& x, AttentionTrace* trace = nullptr);

// Normalized column sums of the head-averaged matrix at `layer` (1-based).
// Higher score = frame attended to more across queries.
std::vector<double> key_frame_scores(const AttentionTrace& trace, int layer);

}  // namespace isn
