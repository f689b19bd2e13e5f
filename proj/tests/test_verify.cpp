#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "isn/errors.hpp"
#include "isn/ops.hpp"
#include "isn/verify.hpp"

using namespace isn;

TEST_CASE("all verify suites pass") {
    for (const char* which : {"grad", "shapes", "oracle", "determinism"}) {
        auto results = run_suites(which);
        REQUIRE(results.size() == 1);
        INFO(format_report(results));
        CHECK(results[0].ok());
        CHECK(results[0].passed == results[0].total);
    }
    auto all = run_suites("all");
    CHECK(all.size() == 4);
    for (const auto& r : all) CHECK(r.ok());
}

TEST_CASE("unknown suite name is a usage error") {
    CHECK_THROWS_AS(run_suites("nope"), UsageError);
}

TEST_CASE("grad suite catches an injected faulty backward") {
    // Swap in a relu whose backward is scaled by 0.5, run the suite, then
    // restore the stock rule so later tests see correct behavior.
    register_op("relu", [](const std::vector<Tensor>& in, const OpAttrs&) {
        const Tensor& x = in.at(0);
        Tensor out = Tensor::make_op("bad-relu", x.shape(), {x}, [](Node& n) {
            Node& nx = *n.inputs[0];
            if (!nx.requires_grad) return;
            auto& gx = nx.grad_buf();
            for (size_t i = 0; i < n.grad.size(); ++i)
                gx[i] += 0.5 * n.grad[i] * (nx.value[i] > 0.0 ? 1.0 : 0.0);
        });
        const auto& xv = x.data();
        auto& yv = out.raw_data();
        for (size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] > 0.0 ? xv[i] : 0.0;
        return out;
    });

    auto results = run_suites("grad");
    register_op("relu", [](const std::vector<Tensor>& in, const OpAttrs&) {
        return ops::relu(in.at(0));
    });

    REQUIRE(results.size() == 1);
    CHECK_FALSE(results[0].ok());
    bool names_relu = false;
    for (const std::string& f : results[0].failures)
        if (f.find("relu") != std::string::npos) names_relu = true;
    CHECK(names_relu);

    // Registry is healthy again.
    auto healthy = run_suites("grad");
    CHECK(healthy[0].ok());
}

TEST_CASE("single op gradcheck hooks are callable directly") {
    CHECK(grad_check_op("add", 3).empty());
    CHECK(grad_check_op("conv3d", 3).empty());
    CHECK(grad_check_composite("frontend", 1).empty());
    CHECK(grad_check_composite("attention", 1).empty());
    CHECK(grad_check_composite("dctcn", 1).empty());
    // Unknown names come back as failure text, not exceptions, so a suite
    // run reports them instead of aborting.
    CHECK(grad_check_op("no-such-op", 1).find("no-such-op") != std::string::npos);
    CHECK(grad_check_composite("no-such-stack", 1).find("unknown") != std::string::npos);
}

TEST_CASE("format_report lists failures with counts") {
    SuiteResult r;
    r.name = "demo";
    r.passed = 1;
    r.total = 3;
    r.failures = {"first thing broke", "second thing broke"};
    std::string text = format_report({r});
    CHECK(text.find("demo: 1/3") != std::string::npos);
    CHECK(text.find("FAIL") != std::string::npos);
    CHECK(text.find("first thing broke") != std::string::npos);
    CHECK(text.find("second thing broke") != std::string::npos);
}
