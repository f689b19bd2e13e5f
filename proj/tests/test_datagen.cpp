#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "isn/datagen.hpp"
#include "isn/errors.hpp"

using namespace isn;

namespace {

SynthSpec small_spec(int classes) {
    SynthSpec s;
    s.classes = classes;
    s.frames = 12;
    s.size = 16;
    s.span_min = 4;
    s.span_max = 10;
    s.signatures = make_signatures(classes, 7);
    return s;
}

SynthSpec clean_spec(int classes) {
    SynthSpec s = small_spec(classes);
    s.noise_sigma = 0.0;
    s.jitter_px = 0.0;
    s.brightness_lo = s.brightness_hi = 1.0;
    s.scale_lo = s.scale_hi = 1.0;
    return s;
}

std::string temp_path(const char* stem) {
    return std::string("/tmp/isn_test_") + stem + "_" + std::to_string(::getpid()) + ".isnd";
}

}  // namespace

TEST_CASE("signatures are deterministic and pairwise separated") {
    auto a = make_signatures(10, 42);
    auto b = make_signatures(10, 42);
    REQUIRE(a.size() == 10);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].freq == b[i].freq);
        CHECK(a[i].amp == b[i].amp);
        CHECK(a[i].asym == b[i].asym);
    }
    auto c = make_signatures(10, 43);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].freq != c[i].freq || a[i].amp != c[i].amp) any_diff = true;
    CHECK(any_diff);

    // No two classes may collapse onto the same motion.
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = i + 1; j < a.size(); ++j) {
            double d = std::fabs(a[i].freq - a[j].freq) + std::fabs(a[i].amp - a[j].amp) +
                       std::fabs(a[i].asym - a[j].asym);
            CHECK(d > 0.01);
        }
}

TEST_CASE("render is deterministic and respects pixel range") {
    SynthSpec spec = small_spec(3);
    auto s1 = render_sequence(1, 99, spec);
    auto s2 = render_sequence(1, 99, spec);
    CHECK(s1.video == s2.video);
    CHECK(s1.mask == s2.mask);
    CHECK(s1.label == 1);

    auto s3 = render_sequence(1, 100, spec);
    CHECK(s1.video != s3.video);

    REQUIRE(s1.video.size() == static_cast<size_t>(spec.frames * spec.size * spec.size));
    for (double v : s1.video) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("mask is one contiguous run within the configured span") {
    SynthSpec spec = small_spec(4);
    for (uint64_t seed = 0; seed < 40; ++seed) {
        auto s = render_sequence(static_cast<int>(seed % 4), 1000 + seed, spec);
        REQUIRE(s.mask.size() == static_cast<size_t>(spec.frames));
        int first = -1, last = -1, count = 0;
        for (int t = 0; t < spec.frames; ++t) {
            CHECK((s.mask[t] == 0 || s.mask[t] == 1));
            if (s.mask[t]) {
                if (first < 0) first = t;
                last = t;
                ++count;
            }
        }
        REQUIRE(count > 0);
        CHECK(count == last - first + 1);  // contiguous
        CHECK(count >= spec.span_min);
        CHECK(count <= spec.span_max);
    }
}

TEST_CASE("motion happens inside the span and still frames match outside") {
    SynthSpec spec = clean_spec(2);
    spec.span_min = 4;
    spec.span_max = 6;  // leave inactive frames on a 12-frame clip
    auto s = render_sequence(0, 7, spec);
    const int px = spec.size * spec.size;

    // All inactive frames show the same closed mouth.
    int ref = -1;
    for (int t = 0; t < spec.frames; ++t) {
        if (s.mask[t]) continue;
        if (ref < 0) {
            ref = t;
            continue;
        }
        for (int p = 0; p < px; ++p) CHECK(s.video[t * px + p] == s.video[ref * px + p]);
    }
    REQUIRE(ref >= 0);

    // Active frames differ from the closed-mouth pose somewhere.
    bool active_moves = false;
    for (int t = 0; t < spec.frames && !active_moves; ++t) {
        if (!s.mask[t]) continue;
        for (int p = 0; p < px; ++p)
            if (s.video[t * px + p] != s.video[ref * px + p]) {
                active_moves = true;
                break;
            }
    }
    CHECK(active_moves);
}

TEST_CASE("distinct classes render distinct clips under fixed nuisances") {
    SynthSpec spec = clean_spec(3);
    auto a = render_sequence(0, 5, spec);
    auto b = render_sequence(1, 5, spec);
    // Same seed fixes span and nuisances, so any difference is the signature.
    double diff = 0.0;
    for (size_t i = 0; i < a.video.size(); ++i) diff += std::fabs(a.video[i] - b.video[i]);
    CHECK(diff > 1.0);
}

TEST_CASE("splits are class balanced with disjoint deterministic content") {
    SynthSpec spec = small_spec(5);
    auto s1 = gen_dataset(spec, 10, 0.8, 0.1, 0.1, 2024);
    auto s2 = gen_dataset(spec, 10, 0.8, 0.1, 0.1, 2024);

    CHECK(s1.train.samples.size() == 40);
    CHECK(s1.val.samples.size() == 5);
    CHECK(s1.test.samples.size() == 5);

    for (const Dataset* ds : {&s1.train, &s1.val, &s1.test}) {
        CHECK(ds->frames == spec.frames);
        CHECK(ds->size == spec.size);
        CHECK(ds->classes == 5);
        std::vector<int> per_class(5, 0);
        for (const auto& s : ds->samples) ++per_class[s.label];
        for (int c = 1; c < 5; ++c) CHECK(per_class[c] == per_class[0]);
    }

    // Determinism across calls.
    for (size_t i = 0; i < s1.train.samples.size(); ++i)
        CHECK(s1.train.samples[i].video == s2.train.samples[i].video);

    // Per-sample seeds never repeat across the three splits.
    std::set<uint64_t> seeds;
    for (const Dataset* ds : {&s1.train, &s1.val, &s1.test})
        for (const auto& s : ds->samples) CHECK(seeds.insert(s.seed).second);

    CHECK_THROWS_AS(gen_dataset(spec, 10, 0.75, 0.15, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(gen_dataset(spec, 10, 0.8, 0.3, 0.1, 1), ConfigError);
}

TEST_CASE("centroid health check sits between chance and solved") {
    // Full-size spec: a linear mean-frame probe must beat chance (the labels
    // are real) without already reading them off (the task is not trivial).
    SynthSpec spec;
    spec.signatures = make_signatures(spec.classes, 7);
    auto noisy = gen_dataset(spec, 20, 0.5, 0.25, 0.25, 77);
    double acc = mean_frame_centroid_accuracy(noisy.train, noisy.test);
    CHECK(acc > 0.15);  // chance is 0.10
    CHECK(acc < 1.0);

    SynthSpec clean = spec;
    clean.noise_sigma = 0.0;
    clean.jitter_px = 0.0;
    clean.brightness_lo = clean.brightness_hi = 1.0;
    clean.scale_lo = clean.scale_hi = 1.0;
    auto easy = gen_dataset(clean, 20, 0.5, 0.25, 0.25, 77);
    double clean_acc = mean_frame_centroid_accuracy(easy.train, easy.test);
    CHECK(clean_acc > 0.25);
    CHECK(clean_acc < 1.0);
}

TEST_CASE("isnd files round-trip through quantization") {
    SynthSpec spec = small_spec(3);
    auto splits = gen_dataset(spec, 4, 0.5, 0.25, 0.25, 31);
    std::string path = temp_path("roundtrip");

    save_dataset(splits.train, path);
    Dataset back = load_dataset(path);
    CHECK(back.frames == splits.train.frames);
    CHECK(back.size == splits.train.size);
    CHECK(back.classes == splits.train.classes);
    REQUIRE(back.samples.size() == splits.train.samples.size());
    for (size_t i = 0; i < back.samples.size(); ++i) {
        const auto& a = splits.train.samples[i];
        const auto& b = back.samples[i];
        CHECK(a.label == b.label);
        CHECK(a.mask == b.mask);
        REQUIRE(a.video.size() == b.video.size());
        double worst = 0.0;  // u8 quantization allows half a step of error
        for (size_t p = 0; p < a.video.size(); ++p)
            worst = std::max(worst, std::fabs(b.video[p] - a.video[p]));
        CHECK(worst <= 0.5 / 255.0 + 1e-12);
    }

    // A second save of the loaded data is byte-identical: u8 pixels are fixed.
    std::string path2 = temp_path("roundtrip2");
    save_dataset(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("isnd loader rejects malformed files") {
    SynthSpec spec = small_spec(2);
    auto splits = gen_dataset(spec, 4, 0.5, 0.25, 0.25, 8);
    std::string path = temp_path("malformed");
    save_dataset(splits.val, path);

    auto clobber = [&](size_t offset, char value) {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(static_cast<std::streamoff>(offset));
        f.put(value);
    };

    clobber(0, 'X');  // magic
    CHECK_THROWS_AS(load_dataset(path), DataFormatError);
    save_dataset(splits.val, path);
    clobber(4, 9);  // version
    CHECK_THROWS_AS(load_dataset(path), DataFormatError);

    // Truncation.
    save_dataset(splits.val, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_dataset(path), DataFormatError);

    CHECK_THROWS_AS(load_dataset("/tmp/isn_no_such_file.isnd"), DataFormatError);
    std::remove(path.c_str());
}
