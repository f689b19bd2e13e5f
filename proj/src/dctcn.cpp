#include "isn/dctcn.hpp"

namespace isn {

void DctcnConfig::validate() const {
    if (num_blocks < 1) throw ConfigError("dctcn: num_blocks must be >= 1");
    if (layers_per_block < 1) throw ConfigError("dctcn: layers_per_block must be >= 1");
    if (growth < 1 || width < 1) throw ConfigError("dctcn: growth and width must be >= 1");
    for (int k : branch_kernels)
        if (k < 1 || k % 2 == 0)
            throw ConfigError("dctcn: branch kernels must be odd (same-length padding), got " +
                              std::to_string(k));
    if (static_cast<int>(dilations.size()) != layers_per_block)
        throw ConfigError("dctcn: dilation schedule must list one entry per dense layer (" +
                          std::to_string(layers_per_block) + "), got " +
                          std::to_string(dilations.size()));
    for (int d : dilations)
        if (d < 1) throw ConfigError("dctcn: dilations must be >= 1");
    if (classes < 2) throw ConfigError("dctcn: class count must be >= 2");
    if (se_reduction < 1) throw ConfigError("dctcn: se_reduction must be >= 1");
}

namespace {

std::string tr_prefix(const std::string& p, int i) { return p + "/tr" + std::to_string(i); }
std::string dl_prefix(const std::string& p, int b, int l) {
    return p + "/db" + std::to_string(b) + "/layer" + std::to_string(l);
}

void declare_transition(ParamStore& ps, const std::string& tp, int cin, int cout, Rng& rng) {
    declare_conv(ps, tp + "/conv", {1, cin, cout}, rng);
    declare_bn(ps, tp + "/bn", cout);
    declare_prelu(ps, tp + "/prelu");
}

void declare_branch(ParamStore& ps, const std::string& bp, int cin, int growth, int kernel,
                    Rng& rng) {
    declare_conv(ps, bp + "/conv", {kernel, cin, growth}, rng);
    declare_bn(ps, bp + "/bn", growth);
    declare_prelu(ps, bp + "/prelu");
}

Tensor branch(GraphCtx& g, const std::string& bp, const Tensor& x, int dilation, int kernel) {
    Tensor y = conv1d_p(g, bp + "/conv", x, 1, dilation, same_pad(kernel, dilation));
    return prelu_p(g, bp + "/prelu", bn_p(g, bp + "/bn", y));
}

}  // namespace

Tensor dctcn_transition(GraphCtx& g, const std::string& tp, const Tensor& x) {
    Tensor y = conv1d_p(g, tp + "/conv", x, 1, 1, 0);
    return prelu_p(g, tp + "/prelu", bn_p(g, tp + "/bn", y));
}

Tensor dctcn_dense_layer(GraphCtx& g, const std::string& lp, const DctcnConfig& cfg,
                         const Tensor& x, int dilation) {
    Tensor gated = se_p(g, lp + "/se", x, {0});
    Tensor a = branch(g, lp + "/bra", gated, dilation, cfg.branch_kernels[0]);
    Tensor b = branch(g, lp + "/brb", gated, dilation, cfg.branch_kernels[1]);
    return ops::concat_last({a, b, x});
}

void dctcn_declare(ParamStore& ps, const std::string& prefix, const DctcnConfig& cfg,
                   int in_width, Rng& rng) {
    cfg.validate();
    if (in_width < 1) throw ConfigError("dctcn: input width must be >= 1");
    int cin = in_width;
    for (int blk = 0; blk < cfg.num_blocks; ++blk) {
        declare_transition(ps, tr_prefix(prefix, blk), cin, cfg.width, rng);
        int c = cfg.width;
        for (int l = 0; l < cfg.layers_per_block; ++l) {
            std::string lp = dl_prefix(prefix, blk, l);
            declare_se(ps, lp + "/se", c, cfg.se_reduction, rng);
            declare_branch(ps, lp + "/bra", c, cfg.growth, cfg.branch_kernels[0], rng);
            declare_branch(ps, lp + "/brb", c, cfg.growth, cfg.branch_kernels[1], rng);
            c += 2 * cfg.growth;
        }
        cin = c;  // C2 + 2*C0*layers
    }
}

Tensor dctcn_forward(GraphCtx& g, const std::string& prefix, const DctcnConfig& cfg,
                     const Tensor& x) {
    Tensor h = x;
    for (int blk = 0; blk < cfg.num_blocks; ++blk) {
        h = dctcn_transition(g, tr_prefix(prefix, blk), h);
        if (h.dim(1) != cfg.width)
            throw ShapeError("dctcn: transition " + std::to_string(blk) + " emitted width " +
                             std::to_string(h.dim(1)) + ", expected " +
                             std::to_string(cfg.width));
        for (int l = 0; l < cfg.layers_per_block; ++l)
            h = dctcn_dense_layer(g, dl_prefix(prefix, blk, l), cfg, h,
                                 cfg.dilations[static_cast<size_t>(l)]);
        if (h.dim(1) != cfg.out_width())
            throw ShapeError("dctcn: block " + std::to_string(blk) + " emitted width " +
                             std::to_string(h.dim(1)) + ", expected " +
                             std::to_string(cfg.out_width()));
    }
    return h;
}

void classifier_declare(ParamStore& ps, const std::string& prefix, const DctcnConfig& cfg,
                        Rng& rng) {
    declare_linear(ps, prefix, cfg.out_width(), cfg.classes, rng);
}

Tensor classify_forward(GraphCtx& g, const std::string& prefix, const DctcnConfig& cfg,
                        const Tensor& feat) {
    if (feat.rank() != 2 || feat.dim(1) != cfg.out_width())
        throw ShapeError("classify: expected [T," + std::to_string(cfg.out_width()) + "], got " +
                         shape_str(feat.shape()));
    Tensor pooled = ops::mean_axes(feat, {0});  // temporal GAP, sorted reduction
    return linear_p(g, prefix, pooled);
}

}  // namespace isn
