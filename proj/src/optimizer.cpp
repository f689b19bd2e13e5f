#include "isn/optimizer.hpp"

#include <cmath>

#include "isn/errors.hpp"

namespace isn {

void AdamW::step(ParamStore& store, const std::map<std::string, std::vector<double>>& grads,
                 double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& [path, g] : grads) {
        ParamEntry& e = store.at(path);
        if (!e.trainable) throw ShapeError("AdamW: gradient for non-trainable entry " + path);
        if (g.size() != e.value.size()) throw ShapeError("AdamW: gradient size mismatch at " + path);
        auto& m = m_[path];
        auto& v = v_[path];
        if (m.empty()) {
            m.assign(g.size(), 0.0);
            v.assign(g.size(), 0.0);
        }
        for (size_t i = 0; i < g.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            double theta = e.value[i];
            e.value[i] = theta - lr * mhat / (std::sqrt(vhat) + cfg_.eps) - lr * cfg_.weight_decay * theta;
        }
    }
}

}  // namespace isn
