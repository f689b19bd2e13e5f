#include <cmath>

#include "isn/gradcheck.hpp"

namespace isn {

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           std::vector<Tensor> leaves, double eps, double tol) {
    Tensor loss = f(leaves);
    loss.backward();

    std::vector<std::vector<double>> analytic;
    for (const Tensor& leaf : leaves) {
        if (!leaf.requires_grad())
            throw ShapeError("grad_check: every leaf must require gradients");
        analytic.push_back(leaf.has_grad() ? leaf.grad()
                                           : std::vector<double>(leaf.data().size(), 0.0));
    }

    GradCheckResult res;
    res.ok = true;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& vals = leaves[li].raw_data();
        for (size_t ei = 0; ei < vals.size(); ++ei) {
            double keep = vals[ei];
            vals[ei] = keep + eps;
            double lp = f(leaves).item();
            vals[ei] = keep - eps;
            double lm = f(leaves).item();
            vals[ei] = keep;
            double numeric = (lp - lm) / (2.0 * eps);
            double a = analytic[li][ei];
            double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
            double rel = std::fabs(a - numeric) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = "leaf " + std::to_string(li) + " entry " + std::to_string(ei);
            }
        }
    }
    res.ok = res.max_rel_err < tol;
    return res;
}

}  // namespace isn
