#pragma once

#include <map>
#include <string>
#include <vector>

#include "isn/errors.hpp"
#include "isn/ops.hpp"
#include "isn/rng.hpp"
#include "isn/tensor.hpp"

namespace isn {

struct ParamEntry {
    Shape shape;
    std::vector<double> value;
    bool trainable = true;  // false for batch-norm running statistics
};

// Flat, path-addressed parameter storage. Paths look like
// "frontend/stage1/block0/conv1/w"; iteration order is lexicographic, which
// fixes checkpoint layout and gradient merge order.
class ParamStore {
  public:
    // Creates a zero-filled entry on first call; later calls must agree.
    ParamEntry& declare(const std::string& path, const Shape& shape, bool trainable = true);
    bool has(const std::string& path) const { return entries_.count(path) != 0; }
    ParamEntry& at(const std::string& path);
    const ParamEntry& at(const std::string& path) const;
    std::vector<std::string> paths() const;
    std::vector<std::string> trainable_paths() const;
    int64_t total_elements() const;
    std::map<std::string, ParamEntry>& entries() { return entries_; }
    const std::map<std::string, ParamEntry>& entries() const { return entries_; }

  private:
    std::map<std::string, ParamEntry> entries_;
};

// Deterministic fills, element order = storage order.
void init_uniform_fan(ParamEntry& e, int fan_in, Rng& rng);  // U(-1/sqrt(fan), 1/sqrt(fan))
void init_constant(ParamEntry& e, double v);

// One graph's view of the store. Each path mounts at most one leaf node, so a
// parameter used in several places accumulates onto a single gradient buffer.
// `record_grad=false` mounts parameters as constants; the trainer uses that
// for the statistics-only pass that precedes each gradient pass.
class GraphCtx {
  public:
    GraphCtx(ParamStore& store, bool train_mode, bool record_grad = true)
        : store_(&store), train_(train_mode), record_grad_(record_grad) {}

    bool train() const { return train_; }
    bool record_grad() const { return record_grad_; }
    ParamStore& store() { return *store_; }

    Tensor param(const std::string& path);  // trainable leaf, node named by path
    const std::vector<double>& stat(const std::string& path) const;

    // Batch-norm layers deposit their per-graph input statistics here in train
    // mode; the trainer folds them into pooled batch stats and, from the
    // gradient pass, into the running stats once per optimizer step.
    void report_bn(const std::string& prefix, const ops::BnStats& stats) { bn_[prefix] = stats; }
    const std::map<std::string, ops::BnStats>& bn_reports() const { return bn_; }
    void clear_bn_reports() { bn_.clear(); }

    // When set, train-mode batch norm normalizes by these pooled batch
    // statistics (held constant by the gradient) instead of the graph's own.
    void use_pooled_bn(const std::map<std::string, ops::BnStats>* stats) { pooled_ = stats; }
    const ops::BnStats* pooled_bn(const std::string& prefix) const {
        if (!pooled_) return nullptr;
        auto it = pooled_->find(prefix);
        if (it == pooled_->end())
            throw ConfigError("pooled batch-norm stats missing for '" + prefix + "'");
        return &it->second;
    }

  private:
    ParamStore* store_;
    bool train_;
    bool record_grad_;
    std::map<std::string, Tensor> mounted_;
    std::map<std::string, ops::BnStats> bn_;
    const std::map<std::string, ops::BnStats>* pooled_ = nullptr;
};

}  // namespace isn
