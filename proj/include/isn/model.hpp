#pragma once

#include "isn/attention.hpp"
#include "isn/dctcn.hpp"
#include "isn/frontend.hpp"

namespace isn {

struct ModelConfig {
    FrontendConfig frontend;
    AttentionConfig attention;
    DctcnConfig dctcn;
    bool use_word_boundary = true;

    void validate() const;  // cross-module width agreement; throws ConfigError
    int dctcn_in_width() const {
        return frontend.out_channels() + (use_word_boundary ? 1 : 0);
    }
};

// Full pipeline on one clip: frontend -> attention stack -> boundary channel
// concat -> dc-tcn -> temporal GAP -> linear logits.
class Model {
  public:
    ModelConfig cfg;
    ParamStore params;

    // Declares and initializes every parameter, then asserts the channel
    // width chain against the declared shapes. Each module draws from its own
    // seed stream, so ablating one module leaves the others' initial weights
    // untouched.
    void build(uint64_t seed);

    // video: [T,H,W,1]; boundary: length-T values in [0,1] (real-valued after
    // mixup), ignored when use_word_boundary is false.
    Tensor forward(GraphCtx& g, const Tensor& video, const std::vector<double>& boundary,
                   AttentionTrace* trace = nullptr) const;

  private:
    void assert_width_chain() const;
};

}  // namespace isn
