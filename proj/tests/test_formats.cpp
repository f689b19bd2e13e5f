#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "isn/checkpoint.hpp"
#include "isn/config.hpp"

using namespace isn;

namespace {

std::string temp_path(const char* stem) {
    return std::string("/tmp/isn_test_") + stem + "_" + std::to_string(::getpid()) + ".bin";
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

ParamStore sample_store(uint64_t seed) {
    ParamStore ps;
    Rng rng(seed);
    init_uniform_fan(ps.declare("alpha/w", {3, 4}), 12, rng);
    init_constant(ps.declare("alpha/b", {4}), 0.25);
    init_uniform_fan(ps.declare("zeta/w", {2, 2, 2}), 8, rng);
    init_constant(ps.declare("alpha/bn/running_var", {4}, false), 1.0);
    return ps;
}

}  // namespace

TEST_CASE("checkpoint save load save is byte identical") {
    ParamStore ps = sample_store(3);
    std::string p1 = temp_path("ck1"), p2 = temp_path("ck2");
    save_checkpoint(p1, ps, "train.epochs = 3\n");

    CheckpointData ck = load_checkpoint(p1);
    CHECK(ck.version == 1);
    CHECK(ck.config_text == "train.epochs = 3\n");
    CHECK(ck.params.paths() == ps.paths());

    save_checkpoint(p2, ck.params, ck.config_text);
    CHECK(slurp(p1) == slurp(p2));

    // f32 storage: reloaded values match the f32 rounding of the originals.
    for (const std::string& path : ps.paths()) {
        const auto& orig = ps.at(path).value;
        const auto& back = ck.params.at(path).value;
        REQUIRE(orig.size() == back.size());
        for (size_t i = 0; i < orig.size(); ++i)
            CHECK(back[i] == static_cast<double>(static_cast<float>(orig[i])));
    }
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("checkpoint loader rejects malformed files") {
    ParamStore ps = sample_store(4);
    std::string path = temp_path("ckbad");
    save_checkpoint(path, ps, "x = 1\n");

    auto clobber = [&](size_t offset, char value) {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(static_cast<std::streamoff>(offset));
        f.put(value);
    };
    clobber(0, 'Z');
    CHECK_THROWS_AS(load_checkpoint(path), DataFormatError);

    save_checkpoint(path, ps, "x = 1\n");
    clobber(4, 77);  // version
    CHECK_THROWS_AS(load_checkpoint(path), DataFormatError);

    save_checkpoint(path, ps, "x = 1\n");
    std::string bytes = slurp(path);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), DataFormatError);

    CHECK_THROWS_AS(load_checkpoint("/tmp/isn_no_such.ckpt"), DataFormatError);
    std::remove(path.c_str());
}

TEST_CASE("restore_into requires identical path sets and shapes") {
    ParamStore dst = sample_store(5);
    ParamStore src = sample_store(6);
    restore_into(dst, src);  // same layout, different values: fine
    for (const std::string& p : dst.paths()) CHECK(dst.at(p).value == src.at(p).value);

    ParamStore extra = sample_store(5);
    init_constant(extra.declare("stray", {1}), 0.0);
    CHECK_THROWS_AS(restore_into(dst, extra), DataFormatError);

    ParamStore missing;
    Rng rng(1);
    init_uniform_fan(missing.declare("alpha/w", {3, 4}), 12, rng);
    CHECK_THROWS_AS(restore_into(dst, missing), DataFormatError);

    ParamStore reshaped = sample_store(5);
    ParamStore dst2;
    init_uniform_fan(dst2.declare("alpha/w", {4, 3}), 12, rng);
    init_constant(dst2.declare("alpha/b", {4}), 0.0);
    init_uniform_fan(dst2.declare("zeta/w", {2, 2, 2}), 8, rng);
    init_constant(dst2.declare("alpha/bn/running_var", {4}, false), 1.0);
    CHECK_THROWS_AS(restore_into(dst2, reshaped), DataFormatError);
}

TEST_CASE("config text round-trips exactly") {
    RunConfig cfg;
    cfg.train.lr = 0.0007300000000000001;  // exercises %.17g
    cfg.train.epochs = 17;
    cfg.train.use_mixup = false;
    cfg.model.frontend.stage_channels = {24, 48, 96};
    cfg.model.dctcn.dilations = {1, 2, 4, 8};
    cfg.model.attention.layers = 3;
    cfg.data.noise_sigma = 0.031;
    cfg.per_class = 50;
    cfg.data_seed = 9001;

    std::string text = emit_config(cfg);
    RunConfig back = parse_config_text(text);
    CHECK(emit_config(back) == text);

    CHECK(back.train.lr == cfg.train.lr);
    CHECK(back.train.epochs == 17);
    CHECK(back.train.use_mixup == false);
    CHECK(back.model.frontend.stage_channels == std::vector<int>{24, 48, 96});
    CHECK(back.model.dctcn.dilations == std::vector<int>{1, 2, 4, 8});
    CHECK(back.model.attention.layers == 3);
    CHECK(back.data.noise_sigma == 0.031);
    CHECK(back.per_class == 50);
    CHECK(back.data_seed == 9001);
}

TEST_CASE("word boundary key drives the model and trainer together") {
    RunConfig cfg;
    cfg.train.use_word_boundary = false;
    cfg.model.use_word_boundary = false;
    std::string text = emit_config(cfg);
    RunConfig back = parse_config_text(text);
    CHECK(back.train.use_word_boundary == false);
    CHECK(back.model.use_word_boundary == false);

    RunConfig on = parse_config_text("train.use_word_boundary = true\n");
    CHECK(on.train.use_word_boundary == true);
    CHECK(on.model.use_word_boundary == true);
}

TEST_CASE("config parser reports line numbers for bad input") {
    auto message_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const DataFormatError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };

    std::string m = message_of("train.epochs = 5\nbogus.key = 1\n");
    CHECK(m.find("line 2") != std::string::npos);
    CHECK(m.find("bogus.key") != std::string::npos);

    m = message_of("\n# comment\ntrain.epochs = x\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("train.epochs") != std::string::npos);

    m = message_of("train.epochs = 5\n\ntrain.epochs = 6\n");
    CHECK(m.find("line 3") != std::string::npos);
    CHECK(m.find("duplicate") != std::string::npos);

    m = message_of("train.epochs 5\n");
    CHECK(m.find("line 1") != std::string::npos);

    // Fixed-arity lists reject wrong lengths.
    m = message_of("frontend.stem_kernel = 3,3\n");
    CHECK(m.find("line 1") != std::string::npos);
    m = message_of("dctcn.branch_kernels = 3,5,7\n");
    CHECK(m.find("line 1") != std::string::npos);

    // Comments, blank lines, and whitespace parse cleanly.
    RunConfig ok = parse_config_text("# leading comment\n\n  train.epochs = 9  \n");
    CHECK(ok.train.epochs == 9);
}

TEST_CASE("config files load from disk with path in errors") {
    std::string path = temp_path("cfg");
    {
        std::ofstream f(path);
        f << "train.epochs = 2\ntrain.batch_size = 4\n";
    }
    RunConfig cfg = load_config_file(path);
    CHECK(cfg.train.epochs == 2);
    CHECK(cfg.train.batch_size == 4);
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config_file("/tmp/isn_no_such.cfg"), DataFormatError);
}

TEST_CASE("synth spec derives signatures from the config seeds") {
    RunConfig cfg;
    cfg.signature_seed = 11;
    cfg.data.classes = 4;
    SynthSpec spec = cfg.synth_spec();
    REQUIRE(spec.signatures.size() == 4);
    auto expect = make_signatures(4, 11);
    for (size_t i = 0; i < 4; ++i) {
        CHECK(spec.signatures[i].freq == expect[i].freq);
        CHECK(spec.signatures[i].amp == expect[i].amp);
        CHECK(spec.signatures[i].asym == expect[i].asym);
    }
}
