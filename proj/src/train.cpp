#include "isn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "isn/errors.hpp"

namespace isn {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (lr <= 0.0) throw ConfigError("TrainConfig: lr must be > 0");
    if (weight_decay < 0.0) throw ConfigError("TrainConfig: weight_decay must be >= 0");
    if (smoothing < 0.0 || smoothing >= 1.0)
        throw ConfigError("TrainConfig: smoothing must be in [0,1)");
    if (mixup_alpha <= 0.0) throw ConfigError("TrainConfig: mixup_alpha must be > 0");
    if (crop_size < 1) throw ConfigError("TrainConfig: crop_size must be >= 1");
    if (warmup_epochs < 0) throw ConfigError("TrainConfig: warmup_epochs must be >= 0");
    if (tm_max_span < 0) throw ConfigError("TrainConfig: tm_max_span must be >= 0");
}

double TrainConfig::lr_at(int epoch) const {
    if (!cosine_schedule) return lr;
    if (epoch < warmup_epochs) return lr * (epoch + 1) / warmup_epochs;
    int span = std::max(1, epochs - warmup_epochs);
    double progress = static_cast<double>(epoch - warmup_epochs) / span;
    return lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

std::string metrics_line(const EpochMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d\t%.6f\t%.4f\t%.6f\t%.4f\t%.3f", m.epoch, m.train_loss,
                  m.train_acc, m.val_loss, m.val_acc, m.wall_seconds);
    return buf;
}

namespace {

// One training example after augmentation, ready to mount on a graph.
struct Prepared {
    std::vector<double> video;     // T*crop*crop
    std::vector<double> boundary;  // T reals, empty when boundary input is off
    std::vector<double> target;    // class distribution q
    int label = 0;
};

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

// Weighted running batch-norm statistics for one optimizer step.
struct BnAgg {
    double n = 0.0;
    std::vector<double> wmean, wesq;  // sum of group*mean, group*E[x^2]
};

void fold_bn(std::map<std::string, BnAgg>& agg, const GraphCtx& g) {
    for (const auto& [prefix, st] : g.bn_reports()) {
        BnAgg& a = agg[prefix];
        if (a.wmean.empty()) {
            a.wmean.assign(st.mean.size(), 0.0);
            a.wesq.assign(st.mean.size(), 0.0);
        }
        a.n += static_cast<double>(st.group);
        for (size_t c = 0; c < st.mean.size(); ++c) {
            a.wmean[c] += st.group * st.mean[c];
            a.wesq[c] += st.group * (st.var[c] + st.mean[c] * st.mean[c]);
        }
    }
}

// Collapse the per-graph folds into one batch statistic per layer, keeping the
// variance biased: that is the normalizer convention, Bessel applies only when
// the result feeds the running stats.
std::map<std::string, ops::BnStats> finalize_pool(const std::map<std::string, BnAgg>& agg) {
    std::map<std::string, ops::BnStats> out;
    for (const auto& [prefix, a] : agg) {
        ops::BnStats st;
        st.group = static_cast<int64_t>(std::llround(a.n));
        st.mean.resize(a.wmean.size());
        st.var.resize(a.wmean.size());
        for (size_t c = 0; c < a.wmean.size(); ++c) {
            st.mean[c] = a.wmean[c] / a.n;
            st.var[c] = std::max(0.0, a.wesq[c] / a.n - st.mean[c] * st.mean[c]);
        }
        out.emplace(prefix, std::move(st));
    }
    return out;
}

void update_running_stats(ParamStore& store, const std::map<std::string, BnAgg>& agg,
                          double momentum) {
    for (const auto& [prefix, a] : agg) {
        auto& rm = store.at(prefix + "/running_mean").value;
        auto& rv = store.at(prefix + "/running_var").value;
        for (size_t c = 0; c < rm.size(); ++c) {
            double mean = a.wmean[c] / a.n;
            double var = a.wesq[c] / a.n - mean * mean;
            if (a.n > 1.0) var *= a.n / (a.n - 1.0);
            rm[c] = (1.0 - momentum) * rm[c] + momentum * mean;
            rv[c] = (1.0 - momentum) * rv[c] + momentum * var;
        }
    }
}

double eval_epoch(Model& model, const Dataset& ds, int crop, double* acc_out) {
    double loss_sum = 0.0;
    int hit = 0;
    for (const auto& s : ds.samples) {
        GraphCtx g(model.params, /*train=*/false);
        auto vid = spatial_augment_eval(s.video, ds.frames, ds.size, crop);
        Tensor video = Tensor::constant({ds.frames, crop, crop, 1}, std::move(vid));
        std::vector<double> boundary;
        if (model.cfg.use_word_boundary) boundary.assign(s.mask.begin(), s.mask.end());
        Tensor logits = model.forward(g, video, boundary);
        loss_sum +=
            ops::cross_entropy_logits(logits, smoothed_targets(s.label, ds.classes, 0.0)).item();
        if (argmax_lowest(logits.data()) == s.label) ++hit;
    }
    *acc_out = static_cast<double>(hit) / ds.samples.size();
    return loss_sum / ds.samples.size();
}

}  // namespace

TrainResult train_model(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                        const TrainConfig& cfg, std::ostream* metrics) {
    cfg.validate();
    if (train_ds.samples.empty() || val_ds.samples.empty())
        throw ConfigError("train_model: empty split");
    if (train_ds.frames != val_ds.frames || train_ds.size != val_ds.size ||
        train_ds.classes != val_ds.classes)
        throw ConfigError("train_model: train/val headers disagree");
    if (cfg.crop_size > train_ds.size)
        throw ConfigError("train_model: crop_size exceeds the stored frame size");
    if (cfg.use_word_boundary != model.cfg.use_word_boundary)
        throw ConfigError("train_model: word-boundary toggle disagrees with the model");

    const int T = train_ds.frames, S = train_ds.size, C = train_ds.classes;
    const int crop = cfg.crop_size;
    const int n = static_cast<int>(train_ds.samples.size());
    const int max_span = cfg.tm_max_span > 0 ? cfg.tm_max_span : std::max(1, (2 * T) / 5);
    const double bn_momentum = 0.1;

    AdamW opt({cfg.lr, cfg.weight_decay});
    TrainResult res;
    res.best_val_acc = -1.0;

    if (metrics)
        *metrics << "# epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\twall_seconds\n";

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto tick = std::chrono::steady_clock::now();
        double lr_e = cfg.lr_at(epoch);

        Rng shuffle_rng(derive_seed(cfg.seed, 0x5f1e, static_cast<uint64_t>(epoch)));
        std::iota(order.begin(), order.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(shuffle_rng.uniform_int(0, i));
            std::swap(order[i], order[j]);
        }

        double loss_sum = 0.0;
        int hit = 0;
        int batch_index = 0;
        for (int start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            int bs = std::min(cfg.batch_size, n - start);

            std::vector<Prepared> batch(bs);
            for (int j = 0; j < bs; ++j) {
                const SynthSample& s = train_ds.samples[order[start + j]];
                Rng arng(derive_seed(cfg.seed, 0xa900 + static_cast<uint64_t>(epoch),
                                     static_cast<uint64_t>(order[start + j])));
                Prepared& p = batch[j];
                p.video = spatial_augment_train(s.video, T, S, crop, cfg.use_random_crop,
                                                cfg.use_flip, arng);
                if (cfg.use_time_masking) time_mask(p.video, T, max_span, cfg.tm_fill, arng);
                if (cfg.use_word_boundary) p.boundary.assign(s.mask.begin(), s.mask.end());
                p.target =
                    smoothed_targets(s.label, C, cfg.use_label_smoothing ? cfg.smoothing : 0.0);
                p.label = s.label;
            }

            if (cfg.use_mixup && bs >= 2) {
                Rng mrng(derive_seed(cfg.seed, 0x317d, static_cast<uint64_t>(epoch),
                                     static_cast<uint64_t>(batch_index)));
                double lambda = mrng.beta_symmetric(cfg.mixup_alpha);
                std::vector<Prepared> mixed(bs);
                for (int j = 0; j < bs; ++j) {
                    const Prepared& a = batch[j];
                    const Prepared& b = batch[(j + 1) % bs];
                    mixed[j].video = mixup_blend(a.video, b.video, lambda);
                    if (cfg.use_word_boundary)
                        mixed[j].boundary = mixup_blend(a.boundary, b.boundary, lambda);
                    mixed[j].target = mixup_blend(a.target, b.target, lambda);
                    mixed[j].label = a.label;
                }
                batch = std::move(mixed);
            }

            // Statistics pass: forward every sample without gradients and pool
            // the batch-norm input stats into one batch statistic per layer,
            // so the whole batch shares a normalizer the way a stacked-batch
            // forward would.
            std::map<std::string, BnAgg> bn_pool;
            for (int j = 0; j < bs; ++j) {
                GraphCtx g(model.params, /*train=*/true, /*record_grad=*/false);
                Tensor video = Tensor::constant({T, crop, crop, 1}, batch[j].video);
                model.forward(g, video, batch[j].boundary);
                fold_bn(bn_pool, g);
            }
            const std::map<std::string, ops::BnStats> pooled = finalize_pool(bn_pool);

            // Gradient pass: normalize by the pooled stats (constants to the
            // gradient) and refold the resulting input stats for the EMA.
            std::map<std::string, std::vector<double>> gsum;
            std::map<std::string, BnAgg> bn_agg;
            double batch_loss = 0.0;
            for (int j = 0; j < bs; ++j) {
                GraphCtx g(model.params, /*train=*/true);
                g.use_pooled_bn(&pooled);
                Tensor video = Tensor::constant({T, crop, crop, 1}, std::move(batch[j].video));
                Tensor logits = model.forward(g, video, batch[j].boundary);
                Tensor loss = ops::cross_entropy_logits(logits, batch[j].target);
                batch_loss += loss.item();
                if (argmax_lowest(logits.data()) == batch[j].label) ++hit;
                for (auto& [path, grad] : loss.backward()) {
                    auto& acc = gsum[path];
                    if (acc.empty())
                        acc = std::move(grad);
                    else
                        for (size_t i = 0; i < grad.size(); ++i) acc[i] += grad[i];
                }
                fold_bn(bn_agg, g);
            }
            batch_loss /= bs;
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(batch_index));
            loss_sum += batch_loss * bs;
            for (auto& [path, grad] : gsum)
                for (double& v : grad) v /= bs;
            opt.step(model.params, gsum, lr_e);
            update_running_stats(model.params, bn_agg, bn_momentum);
        }

        EpochMetrics m;
        m.epoch = epoch + 1;
        m.train_loss = loss_sum / n;
        m.train_acc = static_cast<double>(hit) / n;
        m.val_loss = eval_epoch(model, val_ds, crop, &m.val_acc);
        m.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
        res.history.push_back(m);
        if (metrics) {
            *metrics << metrics_line(m) << "\n";
            metrics->flush();
        }
        if (m.val_acc > res.best_val_acc) {
            res.best_val_acc = m.val_acc;
            res.best_epoch = m.epoch;
            res.best_params = model.params;
        }
    }
    return res;
}

EvalResult evaluate_logits(
    const std::function<std::vector<double>(const SynthSample&)>& logits_fn,
    const Dataset& ds) {
    if (ds.samples.empty()) throw ConfigError("evaluate: empty dataset");
    EvalResult r;
    r.per_class_acc.assign(ds.classes, 0.0);
    std::vector<int> per_class_n(ds.classes, 0);
    int hit = 0;
    for (const auto& s : ds.samples) {
        std::vector<double> logits = logits_fn(s);
        if (static_cast<int>(logits.size()) != ds.classes)
            throw ShapeError("evaluate: logit count does not match class count");
        r.loss += ops::cross_entropy_logits(Tensor::constant({ds.classes}, logits),
                                            smoothed_targets(s.label, ds.classes, 0.0))
                      .item();
        ++per_class_n[s.label];
        if (argmax_lowest(logits) == s.label) {
            ++hit;
            r.per_class_acc[s.label] += 1.0;
        }
    }
    for (int c = 0; c < ds.classes; ++c)
        if (per_class_n[c] > 0) r.per_class_acc[c] /= per_class_n[c];
    r.top1 = static_cast<double>(hit) / ds.samples.size();
    r.loss /= ds.samples.size();
    return r;
}

EvalResult evaluate_model(Model& model, const Dataset& ds, int crop_size) {
    if (crop_size < 1 || crop_size > ds.size)
        throw ConfigError("evaluate_model: crop_size exceeds the stored frame size");
    return evaluate_logits(
        [&](const SynthSample& s) {
            GraphCtx g(model.params, /*train=*/false);
            auto vid = spatial_augment_eval(s.video, ds.frames, ds.size, crop_size);
            Tensor video = Tensor::constant({ds.frames, crop_size, crop_size, 1}, std::move(vid));
            std::vector<double> boundary;
            if (model.cfg.use_word_boundary) boundary.assign(s.mask.begin(), s.mask.end());
            return model.forward(g, video, boundary).data();
        },
        ds);
}

}  // namespace isn
