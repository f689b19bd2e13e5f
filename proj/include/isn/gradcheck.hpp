#pragma once

#include <functional>
#include <string>
#include <vector>

#include "isn/tensor.hpp"

namespace isn {

struct GradCheckResult {
    bool ok = false;
    double max_rel_err = 0.0;
    std::string worst;  // "leaf 2 entry 17" style location of the worst error
};

// Central-difference check of reverse-mode gradients. `f` must build a fresh
// scalar-loss graph from the given leaves on every call; the leaves are
// perturbed in place between calls. Relative error per entry is
// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> leaves, double eps = 1e-5, double tol = 1e-4);

}  // namespace isn
