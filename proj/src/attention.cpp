#include <cmath>

#include "isn/attention.hpp"

namespace isn {

void AttentionConfig::validate() const {
    if (layers < 0) throw ConfigError("attention: layer count must be >= 0");
    if (heads < 1) throw ConfigError("attention: head count must be >= 1");
    if (d_model < 1 || d_ff < 1) throw ConfigError("attention: widths must be >= 1");
    if (d_model % heads != 0)
        throw ConfigError("attention: d_model " + std::to_string(d_model) +
                          " not divisible by heads " + std::to_string(heads));
}

namespace {

std::string layer_prefix(const std::string& prefix, int l) {
    return prefix + "/layer" + std::to_string(l);
}

// Sinusoidal positions, added to the input when enabled.
Tensor positional_table(int T, int d) {
    std::vector<double> pe(static_cast<size_t>(T) * d);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < d; ++i) {
            double angle = t / std::pow(10000.0, (2.0 * (i / 2)) / d);
            pe[static_cast<size_t>(t) * d + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return Tensor::leaf({T, d}, std::move(pe), false);
}

Tensor mhsa(GraphCtx& g, const std::string& lp, const AttentionConfig& cfg, const Tensor& x,
            AttentionTrace::Layer* slice) {
    int T = x.dim(0);
    int dk = cfg.d_k();
    Tensor q = linear_p(g, lp + "/q", x);
    Tensor k = linear_p(g, lp + "/k", x);
    Tensor v = linear_p(g, lp + "/v", x);

    std::vector<Tensor> heads;
    heads.reserve(static_cast<size_t>(cfg.heads));
    for (int h = 0; h < cfg.heads; ++h) {
        Tensor qh = ops::slice_last(q, h * dk, dk);
        Tensor kh = ops::slice_last(k, h * dk, dk);
        Tensor vh = ops::slice_last(v, h * dk, dk);
        Tensor logits = ops::scale(ops::matmul(qh, kh, false, true),
                                   1.0 / std::sqrt(static_cast<double>(dk)));
        Tensor att = ops::softmax_last(logits);  // [T,T], rows are queries
        if (slice) slice->head.push_back(att.data());
        heads.push_back(ops::matmul(att, vh));
    }
    Tensor merged = cfg.heads == 1 ? heads[0] : ops::concat_last(heads);
    if (slice) {
        slice->head_avg.assign(static_cast<size_t>(T) * T, 0.0);
        for (const auto& m : slice->head)
            for (size_t i = 0; i < m.size(); ++i) slice->head_avg[i] += m[i];
        for (double& v2 : slice->head_avg) v2 /= cfg.heads;
    }
    return linear_p(g, lp + "/out", merged);
}

}  // namespace

void attention_declare(ParamStore& ps, const std::string& prefix, const AttentionConfig& cfg,
                       Rng& rng) {
    cfg.validate();
    for (int l = 0; l < cfg.layers; ++l) {
        std::string lp = layer_prefix(prefix, l);
        declare_ln(ps, lp + "/ln1", cfg.d_model);
        declare_linear(ps, lp + "/q", cfg.d_model, cfg.d_model, rng);
        declare_linear(ps, lp + "/k", cfg.d_model, cfg.d_model, rng);
        declare_linear(ps, lp + "/v", cfg.d_model, cfg.d_model, rng);
        declare_linear(ps, lp + "/out", cfg.d_model, cfg.d_model, rng);
        declare_ln(ps, lp + "/ln2", cfg.d_model);
        declare_linear(ps, lp + "/mlp1", cfg.d_model, cfg.d_ff, rng);
        declare_linear(ps, lp + "/mlp2", cfg.d_ff, cfg.d_model, rng);
    }
}

Tensor attention_forward(GraphCtx& g, const std::string& prefix, const AttentionConfig& cfg,
                         const Tensor& x, AttentionTrace* trace) {
    if (x.rank() != 2 || x.dim(1) != cfg.d_model)
        throw ShapeError("attention: input must be [T," + std::to_string(cfg.d_model) +
                         "], got " + shape_str(x.shape()));
    if (trace) {
        trace->T = x.dim(0);
        trace->layers.clear();
    }
    Tensor h = x;
    if (cfg.layers == 0) return h;  // ablation bypass: identity, no trace layers

    if (cfg.positional_encoding)
        h = ops::add(h, positional_table(x.dim(0), cfg.d_model));

    for (int l = 0; l < cfg.layers; ++l) {
        std::string lp = layer_prefix(prefix, l);
        AttentionTrace::Layer* slice = nullptr;
        if (trace) {
            trace->layers.emplace_back();
            slice = &trace->layers.back();
        }
        // B' = B + MHSA(LN(B)); B+ = B' + MLP(LN(B'))
        h = ops::add(h, mhsa(g, lp, cfg, ln_p(g, lp + "/ln1", h), slice));
        Tensor z = ln_p(g, lp + "/ln2", h);
        Tensor m = linear_p(g, lp + "/mlp2", ops::relu(linear_p(g, lp + "/mlp1", z)));
        h = ops::add(h, m);
    }
    return h;
}

std::vector<double> key_frame_scores(const AttentionTrace& trace, int layer) {
    if (layer < 1 || layer > static_cast<int>(trace.layers.size()))
        throw ConfigError("key_frame_scores: layer " + std::to_string(layer) +
                          " out of range 1.." + std::to_string(trace.layers.size()));
    const auto& avg = trace.layers[static_cast<size_t>(layer - 1)].head_avg;
    int T = trace.T;
    std::vector<double> scores(static_cast<size_t>(T), 0.0);
    double total = 0.0;
    for (int r = 0; r < T; ++r)
        for (int c = 0; c < T; ++c) {
            scores[static_cast<size_t>(c)] += avg[static_cast<size_t>(r) * T + c];
            total += avg[static_cast<size_t>(r) * T + c];
        }
    for (double& s : scores) s /= total;
    return scores;
}

}  // namespace isn
