#include <cmath>

#include "isn/params.hpp"

namespace isn {

ParamEntry& ParamStore::declare(const std::string& path, const Shape& shape, bool trainable) {
    auto it = entries_.find(path);
    if (it != entries_.end()) {
        if (it->second.shape != shape || it->second.trainable != trainable)
            throw ConfigError("parameter '" + path + "' redeclared with different shape or kind");
        return it->second;
    }
    ParamEntry e;
    e.shape = shape;
    e.value.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
    e.trainable = trainable;
    return entries_.emplace(path, std::move(e)).first->second;
}

ParamEntry& ParamStore::at(const std::string& path) {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw ConfigError("unknown parameter '" + path + "'");
    return it->second;
}

const ParamEntry& ParamStore::at(const std::string& path) const {
    auto it = entries_.find(path);
    if (it == entries_.end()) throw ConfigError("unknown parameter '" + path + "'");
    return it->second;
}

std::vector<std::string> ParamStore::paths() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(k);
    return out;
}

std::vector<std::string> ParamStore::trainable_paths() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (v.trainable) out.push_back(k);
    return out;
}

int64_t ParamStore::total_elements() const {
    int64_t n = 0;
    for (const auto& [k, v] : entries_) n += static_cast<int64_t>(v.value.size());
    return n;
}

void init_uniform_fan(ParamEntry& e, int fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
    for (double& v : e.value) v = rng.uniform(-bound, bound);
}

void init_constant(ParamEntry& e, double v) {
    for (double& x : e.value) x = v;
}

Tensor GraphCtx::param(const std::string& path) {
    auto it = mounted_.find(path);
    if (it != mounted_.end()) return it->second;
    const ParamEntry& e = store_->at(path);
    if (!e.trainable)
        throw ConfigError("parameter '" + path + "' is a running statistic, not trainable");
    Tensor t = Tensor::leaf(e.shape, e.value, /*trainable=*/record_grad_, path);
    mounted_.emplace(path, t);
    return t;
}

const std::vector<double>& GraphCtx::stat(const std::string& path) const {
    return store_->at(path).value;
}

}  // namespace isn
