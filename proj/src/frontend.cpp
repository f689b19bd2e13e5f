#include "isn/frontend.hpp"

namespace isn {

namespace {

std::string stage_prefix(const std::string& prefix, int s, int b) {
    return prefix + "/stage" + std::to_string(s) + "/block" + std::to_string(b);
}

// First block of every stage after the first downsamples spatially by 2.
std::array<int, 2> block_stride(int stage, int block) {
    return (stage > 0 && block == 0) ? std::array<int, 2>{2, 2} : std::array<int, 2>{1, 1};
}

}  // namespace

void FrontendConfig::validate() const {
    if (stem_channels < 1) throw ConfigError("frontend: stem_channels must be >= 1");
    if (stem_stride[0] != 1)
        throw ConfigError("frontend: temporal stem stride must be 1 (T is preserved end-to-end)");
    if (stem_kernel[0] % 2 == 0 || pool_kernel[0] != 1)
        throw ConfigError("frontend: temporal stem kernel must be odd and pool temporal kernel 1");
    if (stage_channels.empty()) throw ConfigError("frontend: stage_channels is empty");
    for (size_t i = 1; i < stage_channels.size(); ++i)
        if (stage_channels[i] < stage_channels[i - 1])
            throw ConfigError("frontend: stage_channels must be nondecreasing");
    for (int c : stage_channels)
        if (c < 1) throw ConfigError("frontend: stage channel must be >= 1");
    if (blocks_per_stage < 1) throw ConfigError("frontend: blocks_per_stage must be >= 1");
    if (se_reduction < 1) throw ConfigError("frontend: se_reduction must be >= 1");
}

void frontend_declare(ParamStore& ps, const std::string& prefix, const FrontendConfig& cfg,
                      Rng& rng) {
    cfg.validate();
    declare_conv(ps, prefix + "/stem/conv",
                 {cfg.stem_kernel[0], cfg.stem_kernel[1], cfg.stem_kernel[2], 1,
                  cfg.stem_channels},
                 rng);
    declare_bn(ps, prefix + "/stem/bn", cfg.stem_channels);

    int cin = cfg.stem_channels;
    for (size_t s = 0; s < cfg.stage_channels.size(); ++s) {
        int cout = cfg.stage_channels[s];
        for (int b = 0; b < cfg.blocks_per_stage; ++b) {
            std::string bp = stage_prefix(prefix, static_cast<int>(s), b);
            declare_conv(ps, bp + "/conv1", {3, 3, cin, cout}, rng);
            declare_bn(ps, bp + "/bn1", cout);
            declare_conv(ps, bp + "/conv2", {3, 3, cout, cout}, rng);
            declare_bn(ps, bp + "/bn2", cout);
            declare_se(ps, bp + "/se", cout, cfg.se_reduction, rng);
            if (cin != cout || block_stride(static_cast<int>(s), b)[0] != 1) {
                declare_conv(ps, bp + "/short/conv", {1, 1, cin, cout}, rng);
                declare_bn(ps, bp + "/short/bn", cout);
            }
            cin = cout;
        }
    }
}

Tensor frontend_forward(GraphCtx& g, const std::string& prefix, const FrontendConfig& cfg,
                        const Tensor& x) {
    if (x.rank() != 4 || x.dim(3) != 1)
        throw ShapeError("frontend: input must be [T,H,W,1], got " + shape_str(x.shape()));
    int kh = cfg.stem_kernel[1], kw = cfg.stem_kernel[2];
    if (x.dim(1) < kh || x.dim(2) < kw)
        throw ShapeError("frontend: spatial input " + std::to_string(x.dim(1)) + "x" +
                         std::to_string(x.dim(2)) + " smaller than stem kernel " +
                         std::to_string(kh) + "x" + std::to_string(kw));

    Tensor h = conv3d_p(g, prefix + "/stem/conv", x, cfg.stem_stride,
                        {same_pad(cfg.stem_kernel[0]), same_pad(kh), same_pad(kw)});
    h = ops::relu(bn_p(g, prefix + "/stem/bn", h));
    h = ops::maxpool3d(h, cfg.pool_kernel, cfg.pool_stride,
                       {0, same_pad(cfg.pool_kernel[1]), same_pad(cfg.pool_kernel[2])});

    int cin = cfg.stem_channels;
    for (size_t s = 0; s < cfg.stage_channels.size(); ++s) {
        int cout = cfg.stage_channels[s];
        for (int b = 0; b < cfg.blocks_per_stage; ++b) {
            std::string bp = stage_prefix(prefix, static_cast<int>(s), b);
            std::array<int, 2> stride = block_stride(static_cast<int>(s), b);

            Tensor y = conv2d_p(g, bp + "/conv1", h, stride, {1, 1});
            y = ops::relu(bn_p(g, bp + "/bn1", y));
            y = conv2d_p(g, bp + "/conv2", y, {1, 1}, {1, 1});
            y = bn_p(g, bp + "/bn2", y);
            y = se_p(g, bp + "/se", y, {1, 2});

            Tensor shortcut = h;
            if (cin != cout || stride[0] != 1) {
                shortcut = conv2d_p(g, bp + "/short/conv", h, stride, {0, 0});
                shortcut = bn_p(g, bp + "/short/bn", shortcut);
            }
            h = ops::relu(ops::add(y, shortcut));
            cin = cout;
        }
    }
    // spatial global average pooling: [T,H2,W2,C2] -> [T,C2]
    return ops::mean_axes(h, {1, 2});
}

}  // namespace isn
