#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "isn/frontend.hpp"
#include "isn/gradcheck.hpp"

using namespace isn;

namespace {

FrontendConfig tiny_cfg() {
    FrontendConfig cfg;
    cfg.stem_channels = 2;
    cfg.stem_kernel = {3, 3, 3};
    cfg.stem_stride = {1, 2, 2};
    cfg.pool_kernel = {1, 3, 3};
    cfg.pool_stride = {1, 2, 2};
    cfg.stage_channels = {2, 3};
    cfg.blocks_per_stage = 1;
    cfg.se_reduction = 2;
    return cfg;
}

Tensor video(int T, int S, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<size_t>(T) * S * S);
    for (double& e : v) e = rng.uniform();
    return Tensor::leaf({T, S, S, 1}, std::move(v), false);
}

}  // namespace

TEST_CASE("config validation rejects bad shapes") {
    FrontendConfig cfg = tiny_cfg();
    CHECK_NOTHROW(cfg.validate());
    cfg.stem_stride = {2, 2, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_cfg();
    cfg.stage_channels = {4, 2};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_cfg();
    cfg.stage_channels.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("desk-scale arithmetic: 29x32x32 -> 29x64") {
    FrontendConfig cfg;  // desk defaults
    ParamStore ps;
    Rng rng(3);
    frontend_declare(ps, "frontend", cfg, rng);
    GraphCtx g(ps, false);
    Tensor out = frontend_forward(g, "frontend", cfg, video(29, 32, 1));
    CHECK(out.shape() == Shape{29, 64});
}

TEST_CASE("temporal length is preserved for T in {1,5,29}") {
    FrontendConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(5);
    frontend_declare(ps, "frontend", cfg, rng);
    for (int T : {1, 5, 29}) {
        GraphCtx g(ps, false);
        Tensor out = frontend_forward(g, "frontend", cfg, video(T, 16, 7));
        CHECK(out.shape() == Shape{T, cfg.out_channels()});
    }
}

TEST_CASE("too-small spatial input is rejected") {
    FrontendConfig cfg;  // stem 7x7 spatial
    ParamStore ps;
    Rng rng(9);
    frontend_declare(ps, "frontend", cfg, rng);
    GraphCtx g(ps, false);
    CHECK_THROWS_AS(frontend_forward(g, "frontend", cfg, video(3, 5, 1)), ShapeError);
}

TEST_CASE("all-zero input gives identical rows") {
    FrontendConfig cfg = tiny_cfg();
    ParamStore ps;
    Rng rng(11);
    frontend_declare(ps, "frontend", cfg, rng);
    GraphCtx g(ps, false);
    Tensor zero = Tensor::zeros({5, 16, 16, 1});
    Tensor out = frontend_forward(g, "frontend", cfg, zero);
    int C = cfg.out_channels();
    for (int t = 1; t < 5; ++t)
        for (int c = 0; c < C; ++c) {
            double v = out.data()[static_cast<size_t>(t * C + c)];
            CHECK(std::isfinite(v));
            CHECK(v == out.data()[static_cast<size_t>(c)]);
        }
}

TEST_CASE("se gate: zero weights halve the input") {
    // sigmoid(0) = 0.5 on every channel
    ParamStore ps;
    Rng rng(13);
    declare_se(ps, "se", 3, 2, rng);
    for (const auto& p : ps.trainable_paths()) init_constant(ps.at(p), 0.0);
    GraphCtx g(ps, false);
    Tensor x = Tensor::leaf({2, 3}, {1.0, -2.0, 3.0, 4.0, 5.0, -6.0}, false);
    Tensor y = se_p(g, "se", x, {0});
    for (size_t i = 0; i < 6; ++i) CHECK(y.data()[i] == doctest::Approx(0.5 * x.data()[i]));
}

TEST_CASE("full front-end gradient check on a 3-frame clip") {
    FrontendConfig cfg = tiny_cfg();
    cfg.stage_channels = {2};
    ParamStore ps;
    Rng rng(17);
    frontend_declare(ps, "f", cfg, rng);

    Rng xr(19);
    std::vector<double> xv(3 * 8 * 8);
    for (double& e : xv) e = xr.uniform();
    Tensor x = Tensor::leaf({3, 8, 8, 1}, std::move(xv), true, "");

    // Mount every parameter once; the finite-difference perturbations then
    // land directly in the leaves each fresh forward reads.
    auto paths = ps.trainable_paths();
    GraphCtx g(ps, true);
    std::vector<Tensor> leaves = {x};
    for (const auto& p : paths) leaves.push_back(g.param(p));
    auto f = [&](const std::vector<Tensor>& ls) {
        Tensor out = frontend_forward(g, "f", cfg, ls[0]);
        Rng pr(23);
        std::vector<double> proj(out.data().size());
        for (double& e : proj) e = pr.normal();
        Tensor w = Tensor::leaf(out.shape(), std::move(proj), false);
        return ops::mean_axes(ops::mul(out, w), {0, 1});
    };
    auto res = grad_check(f, leaves, 1e-5, 1e-4);
    CHECK_MESSAGE(res.ok, "max rel err " << res.max_rel_err << " at " << res.worst);
}
