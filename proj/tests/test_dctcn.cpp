#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "isn/dctcn.hpp"
#include "isn/gradcheck.hpp"
#include "isn/model.hpp"

using namespace isn;

namespace {

DctcnConfig tiny_cfg() {
    DctcnConfig cfg;
    cfg.num_blocks = 2;
    cfg.layers_per_block = 2;
    cfg.growth = 2;
    cfg.width = 8;
    cfg.dilations = {1, 2};
    cfg.classes = 3;
    cfg.se_reduction = 2;
    return cfg;
}

Tensor frames(int T, int C, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<size_t>(T) * C);
    for (double& e : v) e = rng.normal();
    return Tensor::leaf({T, C}, std::move(v), false);
}

}  // namespace

TEST_CASE("config validation") {
    DctcnConfig cfg = tiny_cfg();
    CHECK_NOTHROW(cfg.validate());
    cfg.branch_kernels = {3, 4};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_cfg();
    cfg.dilations = {1, 2, 4};  // 3 entries for 2 layers
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_cfg();
    cfg.classes = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("width chain: C2=64, C0=16 gives C3=160") {
    DctcnConfig cfg;  // desk defaults
    CHECK(cfg.out_width() == 160);
    CHECK(cfg.block_gain() == 96);
}

TEST_CASE("stack output widths and temporal preservation") {
    DctcnConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(7);
    dctcn_declare(ps, "d", cfg, 9, rng);  // 8 + 1 boundary channel
    for (int T : {1, 5, 29}) {
        GraphCtx g(ps, false);
        Tensor out = dctcn_forward(g, "d", cfg, frames(T, 9, 50 + static_cast<uint64_t>(T)));
        CHECK(out.shape() == Shape{T, cfg.out_width()});
    }
}

TEST_CASE("dense layer reproduces its input in the trailing channels") {
    DctcnConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(11);
    dctcn_declare(ps, "d", cfg, 8, rng);
    GraphCtx g(ps, false);
    Tensor x = frames(6, cfg.width, 60);
    Tensor y = dctcn_dense_layer(g, "d/db0/layer0", cfg, x, 1);
    REQUIRE(y.shape() == Shape{6, cfg.width + 2 * cfg.growth});
    int w = cfg.width + 2 * cfg.growth;
    for (int t = 0; t < 6; ++t)
        for (int c = 0; c < cfg.width; ++c)
            CHECK(y.data()[static_cast<size_t>(t * w + 2 * cfg.growth + c)] ==
                  x.data()[static_cast<size_t>(t * cfg.width + c)]);
}

TEST_CASE("transition with identity weights and neutral bn passes positives through") {
    DctcnConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(13);
    dctcn_declare(ps, "d", cfg, cfg.width, rng);
    // k=1 identity conv, zero bias
    ParamEntry& w = ps.at("d/tr0/conv/w");
    init_constant(w, 0.0);
    for (int c = 0; c < cfg.width; ++c)
        w.value[static_cast<size_t>(c * cfg.width + c)] = 1.0;
    init_constant(ps.at("d/tr0/conv/b"), 0.0);
    // eval-mode bn with unit running stats is the identity
    GraphCtx g(ps, false);
    std::vector<double> v(static_cast<size_t>(4) * cfg.width);
    Rng xr(17);
    for (double& e : v) e = 0.5 + xr.uniform();  // strictly positive
    Tensor x = Tensor::leaf({4, cfg.width}, v, false);
    // eval bn with unit stats scales by 1/sqrt(1+eps): ~5e-6 relative
    Tensor y = dctcn_transition(g, "d/tr0", x);
    for (size_t i = 0; i < v.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(v[i]).epsilon(1e-5));
}

TEST_CASE("classify is bit-invariant under temporal permutation") {
    DctcnConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(19);
    classifier_declare(ps, "cls", cfg, rng);
    int T = 7, C3 = cfg.out_width();
    Tensor x = frames(T, C3, 70);

    std::vector<int> perm(static_cast<size_t>(T));
    std::iota(perm.begin(), perm.end(), 0);
    Rng pr(23);
    for (int i = T - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(pr.uniform_int(0, i))]);
    std::vector<double> pv(x.data().size());
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < C3; ++c)
            pv[static_cast<size_t>(t * C3 + c)] =
                x.data()[static_cast<size_t>(perm[static_cast<size_t>(t)] * C3 + c)];

    GraphCtx g1(ps, false), g2(ps, false);
    Tensor a = classify_forward(g1, "cls", cfg, x);
    Tensor b = classify_forward(g2, "cls", cfg, Tensor::leaf({T, C3}, pv, false));
    REQUIRE(a.shape() == Shape{cfg.classes});
    for (size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("the stack itself is temporally order-sensitive") {
    // dilated convolutions must see order; a permuted input should not give a
    // permuted-then-identical pooled output
    DctcnConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(29);
    dctcn_declare(ps, "d", cfg, cfg.width, rng);
    Tensor x = frames(8, cfg.width, 80);
    std::vector<double> rv(x.data());
    for (int t = 0; t < 8; ++t)
        for (int c = 0; c < cfg.width; ++c)
            rv[static_cast<size_t>(t * cfg.width + c)] =
                x.data()[static_cast<size_t>((7 - t) * cfg.width + c)];

    GraphCtx g1(ps, false), g2(ps, false);
    Tensor a = ops::mean_axes(dctcn_forward(g1, "d", cfg, x), {0});
    Tensor b = ops::mean_axes(dctcn_forward(g2, "d", cfg, Tensor::leaf({8, cfg.width}, rv, false)), {0});
    double diff = 0.0;
    for (size_t i = 0; i < a.data().size(); ++i) diff += std::fabs(a.data()[i] - b.data()[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("tiny stack end-to-end gradient check") {
    DctcnConfig cfg;
    cfg.num_blocks = 2;
    cfg.layers_per_block = 3;
    cfg.growth = 2;
    cfg.width = 8;
    cfg.dilations = {1, 2, 4};
    cfg.classes = 3;
    cfg.se_reduction = 2;
    ParamStore ps;
    Rng rng(31);
    dctcn_declare(ps, "d", cfg, 8, rng);
    classifier_declare(ps, "cls", cfg, rng);

    Rng xr(37);
    std::vector<double> xv(4 * 8);
    for (double& e : xv) e = xr.normal();
    Tensor x = Tensor::leaf({4, 8}, std::move(xv), true, "");

    GraphCtx g(ps, true);
    std::vector<Tensor> leaves = {x};
    for (const auto& p : ps.trainable_paths()) leaves.push_back(g.param(p));
    auto f = [&](const std::vector<Tensor>& ls) {
        Tensor logits = classify_forward(g, "cls", cfg, dctcn_forward(g, "d", cfg, ls[0]));
        std::vector<double> q = {0.2, 0.5, 0.3};
        return ops::cross_entropy_logits(logits, q);
    };
    auto res = grad_check(f, leaves, 1e-5, 1e-4);
    CHECK_MESSAGE(res.ok, "max rel err " << res.max_rel_err << " at " << res.worst);
}

TEST_CASE("model width-chain assertions fire on violations") {
    ModelConfig mc;
    mc.frontend.stage_channels = {8, 16};
    mc.frontend.stem_channels = 4;
    mc.frontend.stem_kernel = {3, 5, 5};
    mc.attention.d_model = 16;
    mc.attention.d_ff = 32;
    mc.attention.layers = 1;
    mc.attention.heads = 2;
    mc.dctcn.width = 16;
    mc.dctcn.growth = 2;
    Model m;
    m.cfg = mc;
    CHECK_NOTHROW(m.build(1));

    // attention width disagrees with the front-end
    ModelConfig bad = mc;
    bad.attention.d_model = 8;
    Model mb;
    mb.cfg = bad;
    CHECK_THROWS_AS(mb.build(1), ConfigError);

    // dctcn transition width disagrees
    ModelConfig bad2 = mc;
    bad2.dctcn.width = 8;
    Model mb2;
    mb2.cfg = bad2;
    CHECK_THROWS_AS(mb2.build(1), ConfigError);
}

TEST_CASE("desk model forward produces 10 logits and the width chain holds") {
    Model m;
    m.cfg = ModelConfig{};  // desk defaults: C2=64, C0=16, L=6, C3=160
    m.build(42);
    CHECK(m.cfg.dctcn.out_width() == 160);

    Rng rng(41);
    std::vector<double> v(static_cast<size_t>(5) * 20 * 20);
    for (double& e : v) e = rng.uniform();
    Tensor video = Tensor::leaf({5, 20, 20, 1}, std::move(v), false);
    std::vector<double> boundary = {0, 1, 1, 1, 0};
    GraphCtx g(m.params, false);
    AttentionTrace trace;
    Tensor logits = m.forward(g, video, boundary, &trace);
    CHECK(logits.shape() == Shape{10});
    CHECK(static_cast<int>(trace.layers.size()) == 6);
}
