#include "isn/model.hpp"

namespace isn {

void ModelConfig::validate() const {
    frontend.validate();
    attention.validate();
    dctcn.validate();
    if (attention.d_model != frontend.out_channels())
        throw ConfigError("model: attention d_model " + std::to_string(attention.d_model) +
                          " must equal frontend output channels " +
                          std::to_string(frontend.out_channels()));
    if (dctcn.width != frontend.out_channels())
        throw ConfigError("model: dctcn width " + std::to_string(dctcn.width) +
                          " must equal frontend output channels " +
                          std::to_string(frontend.out_channels()));
}

void Model::build(uint64_t seed) {
    cfg.validate();
    params = ParamStore();
    Rng fr(derive_seed(seed, 1)), at(derive_seed(seed, 2)), dc(derive_seed(seed, 3)),
        cl(derive_seed(seed, 4));
    frontend_declare(params, "frontend", cfg.frontend, fr);
    attention_declare(params, "attention", cfg.attention, at);
    dctcn_declare(params, "dctcn", cfg.dctcn, cfg.dctcn_in_width(), dc);
    classifier_declare(params, "classifier", cfg.dctcn, cl);
    assert_width_chain();
}

void Model::assert_width_chain() const {
    int c2 = cfg.frontend.out_channels();
    int c3 = cfg.dctcn.out_width();

    if (cfg.attention.layers > 0) {
        const Shape& qw = params.at("attention/layer0/q/w").shape;
        if (qw != Shape{c2, c2})
            throw ConfigError("width chain: attention projections are " + shape_str(qw) +
                              ", expected [" + std::to_string(c2) + "," + std::to_string(c2) +
                              "]");
    }
    const Shape& tr0 = params.at("dctcn/tr0/conv/w").shape;
    if (tr0 != Shape{1, cfg.dctcn_in_width(), c2})
        throw ConfigError("width chain: first transition weight is " + shape_str(tr0) +
                          ", expected [1," + std::to_string(cfg.dctcn_in_width()) + "," +
                          std::to_string(c2) + "]");
    for (int blk = 1; blk < cfg.dctcn.num_blocks; ++blk) {
        const Shape& trw = params.at("dctcn/tr" + std::to_string(blk) + "/conv/w").shape;
        if (trw != Shape{1, c3, c2})
            throw ConfigError("width chain: transition " + std::to_string(blk) + " weight is " +
                              shape_str(trw) + ", expected [1," + std::to_string(c3) + "," +
                              std::to_string(c2) + "]");
    }
    const Shape& cw = params.at("classifier/w").shape;
    if (cw != Shape{c3, cfg.dctcn.classes})
        throw ConfigError("width chain: classifier weight is " + shape_str(cw) +
                          ", expected [" + std::to_string(c3) + "," +
                          std::to_string(cfg.dctcn.classes) + "]");
}

Tensor Model::forward(GraphCtx& g, const Tensor& video, const std::vector<double>& boundary,
                      AttentionTrace* trace) const {
    Tensor feats = frontend_forward(g, "frontend", cfg.frontend, video);
    Tensor synced = attention_forward(g, "attention", cfg.attention, feats, trace);
    if (cfg.use_word_boundary) {
        int T = video.dim(0);
        if (static_cast<int>(boundary.size()) != T)
            throw ShapeError("model: boundary mask length " + std::to_string(boundary.size()) +
                             " does not match T=" + std::to_string(T));
        Tensor bd = Tensor::leaf({T, 1}, boundary, false);
        synced = ops::concat_last({synced, bd});
    }
    Tensor decoded = dctcn_forward(g, "dctcn", cfg.dctcn, synced);
    return classify_forward(g, "classifier", cfg.dctcn, decoded);
}

}  // namespace isn
