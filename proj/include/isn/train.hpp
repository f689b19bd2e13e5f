#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "isn/augment.hpp"
#include "isn/datagen.hpp"
#include "isn/model.hpp"
#include "isn/optimizer.hpp"

namespace isn {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 8;
    double lr = 3e-4;
    double weight_decay = 1e-2;
    double smoothing = 0.1;    // label-smoothing eps; see the shipped configs
    double mixup_alpha = 0.2;  // Beta(alpha, alpha) parameter

    bool use_mixup = true;
    bool use_time_masking = true;
    TimeMaskFill tm_fill = TimeMaskFill::MeanFrame;
    int tm_max_span = 0;  // 0 means floor(0.4 * T)
    bool use_word_boundary = true;
    bool use_label_smoothing = true;
    bool use_flip = true;
    bool use_random_crop = true;
    int crop_size = 24;

    bool cosine_schedule = true;  // constant lr when false
    int warmup_epochs = 5;
    uint64_t seed = 42;

    void validate() const;
    double lr_at(int epoch) const;  // warmup then cosine decay to 0
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
    double wall_seconds = 0.0;
};

// Tab-separated metrics row matching the header written by train_model.
std::string metrics_line(const EpochMetrics& m);

struct TrainResult {
    std::vector<EpochMetrics> history;
    int best_epoch = 0;          // 1-based epoch of the kept snapshot
    double best_val_acc = 0.0;   // ties keep the earlier epoch
    ParamStore best_params;      // full snapshot including running stats
};

// Deterministic loop: shuffle order, per-sample augmentation draws, and the
// per-batch mixup draw all come from streams derived from (seed, epoch, index),
// so two runs with one config produce identical metrics and parameters.
// Throws NumericError (with epoch/batch index) if the loss goes non-finite.
TrainResult train_model(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                        const TrainConfig& cfg, std::ostream* metrics = nullptr);

struct EvalResult {
    double top1 = 0.0;
    double loss = 0.0;                  // cross-entropy against one-hot labels
    std::vector<double> per_class_acc;  // indexed by class
};

// Scores a dataset with any logit source; argmax ties resolve to the lowest
// class index. Empty datasets are an error, not a zero score.
EvalResult evaluate_logits(
    const std::function<std::vector<double>(const SynthSample&)>& logits_fn,
    const Dataset& ds);

// Center-crop, no-flip evaluation of a trained model.
EvalResult evaluate_model(Model& model, const Dataset& ds, int crop_size);

}  // namespace isn
