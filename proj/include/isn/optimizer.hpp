#pragma once

#include <map>
#include <string>
#include <vector>

#include "isn/params.hpp"

namespace isn {

struct AdamWConfig {
    double lr = 3e-4;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction plus decoupled weight decay: the decay term
// theta -= lr * wd * theta uses the pre-step value and never touches the
// moment estimates. State is keyed by parameter path and created lazily.
class AdamW {
  public:
    explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

    // Applies one step to every path in grads; lr overrides cfg.lr so the
    // caller can drive a schedule. Non-trainable entries are rejected.
    void step(ParamStore& store, const std::map<std::string, std::vector<double>>& grads,
              double lr);

    int64_t steps_taken() const { return t_; }

  private:
    AdamWConfig cfg_;
    int64_t t_ = 0;
    std::map<std::string, std::vector<double>> m_, v_;
};

}  // namespace isn
