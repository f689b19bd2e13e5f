#include "isn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "isn/augment.hpp"
#include "isn/checkpoint.hpp"
#include "isn/config.hpp"
#include "isn/gradcheck.hpp"
#include "isn/model.hpp"
#include "isn/optimizer.hpp"
#include "isn/train.hpp"

namespace isn {

namespace {

Tensor rand_leaf(const Shape& shape, Rng& rng) {
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (double& x : v) x = rng.normal();
    return Tensor::leaf(shape, std::move(v), /*trainable=*/true);
}

// Values on a coarse lattice, far from relu/prelu kinks and max-pool ties
// relative to the finite-difference step.
Tensor spaced_leaf(const Shape& shape, Rng& rng) {
    size_t n = static_cast<size_t>(shape_numel(shape));
    std::vector<double> v(n);
    for (size_t i = 0; i < n; ++i) {
        double slot = static_cast<double>(i) - static_cast<double>(n - 1) / 2.0;
        v[i] = 0.31 * (slot + 0.5 * (slot >= 0 ? 1 : -1));
    }
    for (size_t i = n; i > 1; --i)
        std::swap(v[i - 1], v[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    return Tensor::leaf(shape, std::move(v), /*trainable=*/true);
}

Tensor constant_like(const Shape& shape, Rng& rng) {
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (double& x : v) x = rng.normal();
    return Tensor::constant(shape, std::move(v));
}

// Random projection to a scalar so every output entry has a distinct
// gradient path; built from direct ops, outside the registry under test.
Tensor project(const Tensor& out, const Tensor& p) {
    std::vector<int> axes(static_cast<size_t>(out.rank()));
    for (size_t i = 0; i < axes.size(); ++i) axes[i] = static_cast<int>(i);
    return ops::mean_axes(ops::mul(out, p), axes);
}

struct Fixture {
    std::vector<Tensor> leaves;
    std::function<Tensor(const std::vector<Tensor>&)> f;
};

Fixture make_op_fixture(const std::string& op, uint64_t seed) {
    Rng rng(derive_seed(seed, 0x0f17));
    auto through = [op](std::vector<Tensor> inputs, OpAttrs attrs, Tensor p) {
        return [op, inputs = std::move(inputs), attrs = std::move(attrs),
                p = std::move(p)](const std::vector<Tensor>&) {
            return project(forward_op(op, inputs, attrs), p);
        };
    };

    if (op == "add" || op == "elementwise-multiply") {
        Tensor a = rand_leaf({2, 3}, rng), b = rand_leaf({2, 3}, rng);
        return {{a, b}, through({a, b}, {}, constant_like({2, 3}, rng))};
    }
    if (op == "scale-by-constant") {
        Tensor a = rand_leaf({2, 3}, rng);
        return {{a}, through({a}, OpAttrs{}.set("c", 1.7), constant_like({2, 3}, rng))};
    }
    if (op == "relu") {
        Tensor a = spaced_leaf({3, 4}, rng);
        return {{a}, through({a}, {}, constant_like({3, 4}, rng))};
    }
    if (op == "sigmoid") {
        Tensor a = rand_leaf({2, 3}, rng);
        return {{a}, through({a}, {}, constant_like({2, 3}, rng))};
    }
    if (op == "prelu") {
        Tensor x = spaced_leaf({3, 4}, rng);
        Tensor slope = Tensor::leaf({1}, {0.3}, true);
        return {{x, slope}, through({x, slope}, {}, constant_like({3, 4}, rng))};
    }
    if (op == "concat-on-channel") {
        Tensor a = rand_leaf({3, 2}, rng), b = rand_leaf({3, 3}, rng);
        return {{a, b}, through({a, b}, {}, constant_like({3, 5}, rng))};
    }
    if (op == "slice-on-channel") {
        Tensor x = rand_leaf({3, 6}, rng);
        OpAttrs a;
        a.set("start", static_cast<int64_t>(1)).set("len", static_cast<int64_t>(3));
        return {{x}, through({x}, a, constant_like({3, 3}, rng))};
    }
    if (op == "mean-over-axes") {
        Tensor x = rand_leaf({2, 3, 4}, rng);
        OpAttrs a;
        a.set("axes", std::vector<int>{0, 2});
        return {{x}, through({x}, a, constant_like({3}, rng))};
    }
    if (op == "matmul") {
        Tensor a = rand_leaf({3, 4}, rng), b = rand_leaf({4, 2}, rng);
        return {{a, b}, through({a, b}, {}, constant_like({3, 2}, rng))};
    }
    if (op == "linear") {
        Tensor x = rand_leaf({3, 4}, rng), w = rand_leaf({4, 2}, rng), b = rand_leaf({2}, rng);
        return {{x, w, b}, through({x, w, b}, {}, constant_like({3, 2}, rng))};
    }
    if (op == "softmax") {
        Tensor x = rand_leaf({3, 5}, rng);
        return {{x}, through({x}, {}, constant_like({3, 5}, rng))};
    }
    if (op == "layer-norm" || op == "batch-norm") {
        Tensor x = rand_leaf({5, 3}, rng);
        Tensor gamma = rand_leaf({3}, rng), beta = rand_leaf({3}, rng);
        return {{x, gamma, beta}, through({x, gamma, beta}, {}, constant_like({5, 3}, rng))};
    }
    if (op == "batch-norm-eval") {
        Tensor x = rand_leaf({4, 3}, rng);
        Tensor gamma = rand_leaf({3}, rng), beta = rand_leaf({3}, rng);
        OpAttrs a;
        a.set("running_mean", std::vector<double>{0.1, -0.2, 0.3});
        a.set("running_var", std::vector<double>{0.5, 1.5, 0.9});
        return {{x, gamma, beta}, through({x, gamma, beta}, a, constant_like({4, 3}, rng))};
    }
    if (op == "scale-by-gate") {
        Tensor x = rand_leaf({4, 6}, rng);
        std::vector<double> gv(6);
        for (double& g : gv) g = rng.uniform(0.2, 0.8);
        Tensor gate = Tensor::leaf({6}, std::move(gv), true);
        return {{x, gate}, through({x, gate}, {}, constant_like({4, 6}, rng))};
    }
    if (op == "conv1d") {
        Tensor x = rand_leaf({6, 3}, rng), w = rand_leaf({3, 3, 2}, rng), b = rand_leaf({2}, rng);
        OpAttrs a;
        a.set("stride", static_cast<int64_t>(1))
            .set("dilation", static_cast<int64_t>(2))
            .set("pad", static_cast<int64_t>(2));
        return {{x, w, b}, through({x, w, b}, a, constant_like({6, 2}, rng))};
    }
    if (op == "conv2d") {
        Tensor x = rand_leaf({2, 5, 5, 2}, rng), w = rand_leaf({3, 3, 2, 2}, rng),
               b = rand_leaf({2}, rng);
        OpAttrs a;
        a.set("stride", std::vector<int>{2, 2}).set("pad", std::vector<int>{1, 1});
        return {{x, w, b}, through({x, w, b}, a, constant_like({2, 3, 3, 2}, rng))};
    }
    if (op == "conv3d") {
        Tensor x = rand_leaf({3, 4, 4, 2}, rng), w = rand_leaf({3, 3, 3, 2, 2}, rng),
               b = rand_leaf({2}, rng);
        OpAttrs a;
        a.set("stride", std::vector<int>{1, 2, 2}).set("pad", std::vector<int>{1, 1, 1});
        return {{x, w, b}, through({x, w, b}, a, constant_like({3, 2, 2, 2}, rng))};
    }
    if (op == "maxpool3d") {
        Tensor x = spaced_leaf({3, 4, 4, 2}, rng);
        OpAttrs a;
        a.set("kernel", std::vector<int>{1, 3, 3})
            .set("stride", std::vector<int>{1, 2, 2})
            .set("pad", std::vector<int>{0, 1, 1});
        return {{x}, through({x}, a, constant_like({3, 2, 2, 2}, rng))};
    }
    if (op == "cross-entropy") {
        Tensor z = rand_leaf({7}, rng);
        OpAttrs a;
        a.set("q", smoothed_targets(2, 7, 0.3));
        return {{z}, [z, a](const std::vector<Tensor>&) { return forward_op("cross-entropy", {z}, a); }};
    }
    throw ShapeError("no gradient fixture for op '" + op + "'");
}

}  // namespace

std::vector<std::string> grad_fixture_ops() { return registered_ops(); }

std::string grad_check_op(const std::string& op_id, uint64_t seed, double tol) {
    Fixture fx;
    try {
        fx = make_op_fixture(op_id, seed);
    } catch (const std::exception& e) {
        return std::string("op ") + op_id + ": " + e.what();
    }
    GradCheckResult r = grad_check(fx.f, fx.leaves, 1e-5, tol);
    if (r.ok) return {};
    char buf[160];
    std::snprintf(buf, sizeof buf, "op %s: max rel err %.3g at %s", op_id.c_str(),
                  r.max_rel_err, r.worst.c_str());
    return buf;
}

std::string grad_check_composite(const std::string& which, uint64_t seed, double tol) {
    Rng rng(derive_seed(seed, 0xc095));
    auto store = std::make_shared<ParamStore>();
    auto g = std::make_shared<GraphCtx>(*store, /*train=*/true);
    Tensor x;
    std::function<Tensor()> build;

    if (which == "frontend") {
        FrontendConfig fc;
        fc.stem_channels = 2;
        fc.stem_kernel = {3, 3, 3};
        fc.stage_channels = {2};
        fc.blocks_per_stage = 1;
        fc.se_reduction = 2;
        frontend_declare(*store, "f", fc, rng);
        x = rand_leaf({3, 8, 8, 1}, rng);
        Tensor p = constant_like({3, 2}, rng);
        build = [g, fc, x, p] { return project(frontend_forward(*g, "f", fc, x), p); };
    } else if (which == "attention") {
        AttentionConfig ac;
        ac.layers = 2;
        ac.heads = 2;
        ac.d_model = 8;
        ac.d_ff = 16;
        attention_declare(*store, "a", ac, rng);
        x = rand_leaf({4, 8}, rng);
        Tensor p = constant_like({4, 8}, rng);
        build = [g, ac, x, p] { return project(attention_forward(*g, "a", ac, x), p); };
    } else if (which == "dctcn") {
        DctcnConfig dc;
        dc.num_blocks = 2;
        dc.layers_per_block = 2;
        dc.growth = 2;
        dc.width = 6;
        dc.dilations = {1, 2};
        dc.classes = 3;
        dc.se_reduction = 2;
        dctcn_declare(*store, "d", dc, 7, rng);
        classifier_declare(*store, "cls", dc, rng);
        x = rand_leaf({5, 7}, rng);
        auto q = smoothed_targets(1, 3, 0.2);
        build = [g, dc, x, q] {
            Tensor feats = dctcn_forward(*g, "d", dc, x);
            return ops::cross_entropy_logits(classify_forward(*g, "cls", dc, feats), q);
        };
    } else {
        return "composite " + which + ": unknown stack";
    }

    // Gradients are checked for the input and every trainable parameter; the
    // ctx hands back the same mounted leaf on each rebuild.
    std::vector<Tensor> leaves{x};
    for (const std::string& path : store->trainable_paths()) leaves.push_back(g->param(path));

    GradCheckResult r = grad_check([&build](const std::vector<Tensor>&) { return build(); },
                                   leaves, 1e-5, tol);
    if (r.ok) return {};
    char buf[160];
    std::snprintf(buf, sizeof buf, "composite %s: max rel err %.3g at %s", which.c_str(),
                  r.max_rel_err, r.worst.c_str());
    return buf;
}

SuiteResult run_grad_suite() {
    SuiteResult s{"grad", 0, 0, {}};
    for (const std::string& op : grad_fixture_ops()) {
        ++s.total;
        std::string msg = grad_check_op(op, 1);
        if (msg.empty())
            ++s.passed;
        else
            s.failures.push_back(msg);
    }
    for (const char* which : {"frontend", "attention", "dctcn"}) {
        ++s.total;
        std::string msg = grad_check_composite(which, 1);
        if (msg.empty())
            ++s.passed;
        else
            s.failures.push_back(msg);
    }
    return s;
}

namespace {

void check(SuiteResult& s, bool ok, const std::string& what) {
    ++s.total;
    if (ok)
        ++s.passed;
    else
        s.failures.push_back(what);
}

ModelConfig tiny_model_config() {
    ModelConfig mc;
    mc.frontend.stem_channels = 2;
    mc.frontend.stem_kernel = {3, 3, 3};
    mc.frontend.stage_channels = {4};
    mc.frontend.blocks_per_stage = 1;
    mc.frontend.se_reduction = 2;
    mc.attention.layers = 1;
    mc.attention.heads = 2;
    mc.attention.d_model = 4;
    mc.attention.d_ff = 8;
    mc.dctcn.num_blocks = 2;
    mc.dctcn.layers_per_block = 2;
    mc.dctcn.growth = 2;
    mc.dctcn.width = 4;
    mc.dctcn.dilations = {1, 2};
    mc.dctcn.classes = 2;
    mc.dctcn.se_reduction = 2;
    return mc;
}

}  // namespace

SuiteResult run_shapes_suite() {
    SuiteResult s{"shapes", 0, 0, {}};

    // Convolution extent arithmetic against the production path.
    struct Case {
        int in, k, stride, dil, pad, want;
    };
    for (const Case& c : {Case{8, 3, 1, 1, 0, 6}, Case{8, 3, 2, 1, 1, 4}, Case{8, 3, 1, 2, 2, 8},
                          Case{7, 1, 1, 1, 0, 7}, Case{9, 5, 3, 1, 2, 3}}) {
        Rng rng(7);
        Tensor x = rand_leaf({c.in, 1}, rng);
        Tensor w = rand_leaf({c.k, 1, 1}, rng);
        Tensor b = Tensor::constant({1}, {0.0});
        try {
            Tensor y = ops::conv1d(x, w, b, c.stride, c.dil, c.pad);
            check(s, y.dim(0) == c.want,
                  "conv extent: in=" + std::to_string(c.in) + " got " + std::to_string(y.dim(0)));
        } catch (const std::exception& e) {
            check(s, false, std::string("conv extent: ") + e.what());
        }
    }

    // Desk-scale width chain asserts inside build.
    try {
        Model m;
        m.cfg.validate();
        m.build(11);
        check(s, true, "");
        check(s, m.cfg.dctcn.out_width() == 160, "desk C3 should be 160");
        check(s, m.params.at("attention/layer0/q/w").shape == Shape({64, 64}),
              "attention projection shape");
        check(s, m.params.at("dctcn/tr0/conv/w").shape == Shape({1, 65, 64}),
              "first transition absorbs the boundary channel");
    } catch (const std::exception& e) {
        check(s, false, std::string("desk build: ") + e.what());
    }

    // Cross-module disagreement must be rejected.
    {
        ModelConfig mc = tiny_model_config();
        mc.attention.d_model = 8;  // frontend emits 4
        bool threw = false;
        try {
            mc.validate();
        } catch (const ConfigError&) {
            threw = true;
        }
        check(s, threw, "width mismatch accepted");
    }

    // Tiny end-to-end forward shape.
    try {
        Model m;
        m.cfg = tiny_model_config();
        m.build(3);
        GraphCtx g(m.params, false);
        Rng rng(5);
        Tensor video = constant_like({5, 10, 10, 1}, rng);
        std::vector<double> boundary(5, 1.0);
        Tensor logits = m.forward(g, video, boundary);
        check(s, logits.shape() == Shape({2}), "tiny forward logits shape");
    } catch (const std::exception& e) {
        check(s, false, std::string("tiny forward: ") + e.what());
    }

    return s;
}

SuiteResult run_oracle_suite() {
    SuiteResult s{"oracle", 0, 0, {}};

    // Dilated temporal conv, frozen by independent hand evaluation.
    {
        std::vector<double> xs(8);
        for (int i = 0; i < 8; ++i) xs[i] = i;
        Tensor x = Tensor::constant({8, 1}, xs);
        Tensor w = Tensor::constant({3, 1, 1}, {1.0, 0.0, -1.0});
        Tensor b = Tensor::constant({1}, {0.0});
        Tensor y = ops::conv1d(x, w, b, 1, 2, 2);
        const std::vector<double> want{-2, -3, -4, -4, -4, -4, 4, 5};
        bool ok = y.data().size() == want.size();
        for (size_t i = 0; ok && i < want.size(); ++i)
            ok = std::fabs(y.data()[i] - want[i]) < 1e-12;
        check(s, ok, "frozen dilated conv trace");
    }

    // Production conv vs the independent direct-loop reference.
    {
        Rng rng(17);
        struct CC {
            int rank;
            Shape xs, ws;
            std::vector<int> stride, dil, pad;
        };
        for (const CC& c :
             {CC{1, {7, 3}, {3, 3, 2}, {2}, {2}, {1}},
              CC{2, {2, 6, 5, 3}, {3, 2, 3, 4}, {1, 2}, {1, 1}, {1, 0}},
              CC{3, {4, 5, 5, 2}, {3, 3, 3, 2, 3}, {1, 2, 2}, {1, 1, 1}, {1, 1, 1}}}) {
            std::vector<double> xv(static_cast<size_t>(shape_numel(c.xs)));
            std::vector<double> wv(static_cast<size_t>(shape_numel(c.ws)));
            for (double& v : xv) v = rng.normal();
            for (double& v : wv) v = rng.normal();
            int cout = c.ws.back();
            std::vector<double> bv(static_cast<size_t>(cout));
            for (double& v : bv) v = rng.normal();
            Shape oracle_shape;
            std::vector<double> want =
                ops::conv_oracle(c.rank, c.xs, xv, c.ws, wv, bv, c.stride, c.dil, c.pad,
                                 &oracle_shape);
            Tensor x = Tensor::constant(c.xs, xv), w = Tensor::constant(c.ws, wv),
                   b = Tensor::constant({cout}, bv);
            Tensor y;
            if (c.rank == 1)
                y = ops::conv1d(x, w, b, c.stride[0], c.dil[0], c.pad[0]);
            else if (c.rank == 2)
                y = ops::conv2d(x, w, b, {c.stride[0], c.stride[1]}, {c.pad[0], c.pad[1]});
            else
                y = ops::conv3d(x, w, b, {c.stride[0], c.stride[1], c.stride[2]},
                                {c.pad[0], c.pad[1], c.pad[2]});
            bool ok = y.shape() == oracle_shape;
            for (size_t i = 0; ok && i < want.size(); ++i)
                ok = std::fabs(y.data()[i] - want[i]) < 1e-9;
            check(s, ok, "conv" + std::to_string(c.rank) + "d vs reference");
        }
    }

    // Cross-entropy analytic values and gradient identity.
    {
        Tensor z = Tensor::constant({10}, std::vector<double>(10, 0.7));
        double loss = ops::cross_entropy_logits(z, smoothed_targets(3, 10, 0.0)).item();
        check(s, std::fabs(loss - 2.302585092994046) < 1e-12, "uniform-logit loss is ln 10");

        Rng rng(23);
        std::vector<double> zv(6);
        for (double& v : zv) v = rng.normal();
        Tensor zl = Tensor::leaf({6}, zv, true, "z");
        auto q = smoothed_targets(4, 6, 0.25);
        Tensor l = ops::cross_entropy_logits(zl, q);
        GradMap gm = l.backward();
        Tensor p = ops::softmax_last(Tensor::constant({6}, zv));
        bool ok = true;
        for (int i = 0; i < 6; ++i)
            ok = ok && std::fabs(gm.at("z")[i] - (p.data()[i] - q[i])) < 1e-12;
        check(s, ok, "cross-entropy gradient is softmax minus targets");
    }

    // Label smoothing, frozen small case plus the sum identity.
    {
        auto q = smoothed_targets(0, 4, 0.95);
        const std::vector<double> want{0.2875, 0.2375, 0.2375, 0.2375};
        bool ok = true;
        for (int i = 0; i < 4; ++i) ok = ok && std::fabs(q[i] - want[i]) < 1e-15;
        check(s, ok, "smoothed targets frozen case");
        for (int n : {2, 10, 137, 1000})
            for (double eps : {0.0, 0.05, 0.5, 0.95}) {
                auto qq = smoothed_targets(n / 2, n, eps);
                double sum = 0.0;
                for (double v : qq) sum += v;
                if (std::fabs(sum - 1.0) > 1e-12) ok = false;
            }
        check(s, ok, "smoothed targets sum to one");
    }

    // AdamW against a two-step scalar trace computed longhand.
    {
        ParamStore ps;
        init_constant(ps.declare("theta", {1}), 1.0);
        AdamW opt({0.1, 0.1, 0.9, 0.999, 1e-8});
        std::map<std::string, std::vector<double>> g{{"theta", {0.5}}};

        double th = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= 2; ++t) {
            m = 0.9 * m + 0.1 * 0.5;
            v = 0.999 * v + 0.001 * 0.25;
            double mh = m / (1.0 - std::pow(0.9, t));
            double vh = v / (1.0 - std::pow(0.999, t));
            th = th - 0.1 * mh / (std::sqrt(vh) + 1e-8) - 0.1 * 0.1 * th;
            opt.step(ps, g, 0.1);
            if (std::fabs(ps.at("theta").value[0] - th) > 1e-12) {
                check(s, false, "adamw trace step " + std::to_string(t));
                th = ps.at("theta").value[0];  // keep going
            } else {
                check(s, true, "");
            }
        }
    }

    return s;
}

SuiteResult run_determinism_suite() {
    SuiteResult s{"determinism", 0, 0, {}};
    namespace fs = std::filesystem;
    fs::path tmp = fs::temp_directory_path() / "isn_verify";
    fs::create_directories(tmp);

    // Identical seeds give identical draw streams.
    {
        Rng a(99), b(99);
        bool ok = true;
        for (int i = 0; i < 1000; ++i) {
            ok = ok && a.next_u64() == b.next_u64() && a.uniform() == b.uniform() &&
                 a.normal() == b.normal();
        }
        check(s, ok, "rng stream repeatability");
    }

    // Sample rendering and dataset files are bit-stable.
    SynthSpec spec;
    spec.classes = 2;
    spec.frames = 7;
    spec.size = 12;
    spec.span_min = 3;
    spec.span_max = 5;
    spec.signatures = make_signatures(2, 5);
    {
        SynthSample a = render_sequence(1, 77, spec), b = render_sequence(1, 77, spec);
        check(s, a.video == b.video && a.mask == b.mask, "render repeatability");
    }
    {
        auto splits1 = gen_dataset(spec, 4, 0.5, 0.25, 0.25, 31);
        auto splits2 = gen_dataset(spec, 4, 0.5, 0.25, 0.25, 31);
        fs::path p1 = tmp / "d1.isnd", p2 = tmp / "d2.isnd";
        save_dataset(splits1.train, p1.string());
        save_dataset(splits2.train, p2.string());
        std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
        std::stringstream b1, b2;
        b1 << f1.rdbuf();
        b2 << f2.rdbuf();
        check(s, b1.str() == b2.str() && !b1.str().empty(), "dataset bytes repeatability");

        Dataset back = load_dataset(p1.string());
        fs::path p3 = tmp / "d3.isnd";
        save_dataset(back, p3.string());
        std::ifstream f3(p3, std::ios::binary);
        std::stringstream b3;
        b3 << f3.rdbuf();
        check(s, b3.str() == b1.str(), "dataset round-trip bytes");
    }

    // Two tiny trainings agree metric-for-metric and weight-for-weight.
    {
        auto run = [&](const fs::path& ck) {
            auto splits = gen_dataset(spec, 4, 0.5, 0.25, 0.25, 31);
            Model m;
            m.cfg = tiny_model_config();
            m.build(13);
            TrainConfig tc;
            tc.epochs = 2;
            tc.batch_size = 4;
            tc.crop_size = 10;
            tc.tm_max_span = 2;
            tc.warmup_epochs = 1;
            tc.seed = 13;
            std::ostringstream metrics;
            TrainResult r = train_model(m, splits.train, splits.val, tc, &metrics);
            save_checkpoint(ck.string(), r.best_params, "snapshot");
            // Drop the wall-clock column, the only time-dependent field.
            std::string text = metrics.str(), kept;
            std::istringstream lines(text);
            std::string line;
            while (std::getline(lines, line)) {
                size_t cut = line.rfind('\t');
                kept += line.substr(0, cut) + "\n";
            }
            return kept;
        };
        fs::path c1 = tmp / "c1.isnc", c2 = tmp / "c2.isnc";
        std::string m1 = run(c1), m2 = run(c2);
        check(s, m1 == m2 && !m1.empty(), "training metrics repeatability");
        std::ifstream f1(c1, std::ios::binary), f2(c2, std::ios::binary);
        std::stringstream b1, b2;
        b1 << f1.rdbuf();
        b2 << f2.rdbuf();
        check(s, b1.str() == b2.str() && !b1.str().empty(), "checkpoint bytes repeatability");

        CheckpointData ck = load_checkpoint(c1.string());
        fs::path c3 = tmp / "c3.isnc";
        save_checkpoint(c3.string(), ck.params, ck.config_text);
        std::ifstream f3(c3, std::ios::binary);
        std::stringstream b3;
        b3 << f3.rdbuf();
        check(s, b3.str() == b1.str(), "checkpoint round-trip bytes");
    }

    // Config text round-trips exactly.
    {
        RunConfig rc;
        rc.train.lr = 0.00037;
        rc.data.noise_sigma = 0.015;
        std::string e1 = emit_config(rc);
        std::string e2 = emit_config(parse_config_text(e1));
        check(s, e1 == e2, "config emit/parse round-trip");
    }

    std::error_code ec;
    fs::remove_all(tmp, ec);
    return s;
}

std::vector<SuiteResult> run_suites(const std::string& which) {
    std::vector<SuiteResult> out;
    bool all = which == "all";
    if (all || which == "grad") out.push_back(run_grad_suite());
    if (all || which == "shapes") out.push_back(run_shapes_suite());
    if (all || which == "oracle") out.push_back(run_oracle_suite());
    if (all || which == "determinism") out.push_back(run_determinism_suite());
    if (out.empty()) throw UsageError("unknown suite '" + which + "'");
    return out;
}

std::string format_report(const std::vector<SuiteResult>& results) {
    std::string out;
    for (const auto& r : results) {
        out += r.name + ": " + std::to_string(r.passed) + "/" + std::to_string(r.total) +
               (r.ok() ? " pass\n" : " FAIL\n");
        for (const auto& f : r.failures) out += "  " + f + "\n";
    }
    return out;
}

}  // namespace isn
