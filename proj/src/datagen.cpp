#include "isn/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "isn/errors.hpp"
#include "isn/rng.hpp"

namespace isn {

void SynthSpec::validate() const {
    if (classes < 2) throw ConfigError("SynthSpec: need at least 2 classes");
    if (frames < 3) throw ConfigError("SynthSpec: frames must be >= 3");
    if (size < 8) throw ConfigError("SynthSpec: frame size must be >= 8");
    if (span_min < 3) throw ConfigError("SynthSpec: span_min must be >= 3");
    if (span_max > frames) throw ConfigError("SynthSpec: span_max must be <= frames");
    if (span_min > span_max) throw ConfigError("SynthSpec: span_min > span_max");
    if (brightness_lo > brightness_hi || scale_lo > scale_hi)
        throw ConfigError("SynthSpec: nuisance range inverted");
    if (noise_sigma < 0.0 || jitter_px < 0.0)
        throw ConfigError("SynthSpec: nuisance magnitudes must be >= 0");
    if (static_cast<int>(signatures.size()) != classes)
        throw ConfigError("SynthSpec: signature count does not match class count");
}

std::vector<SynthSpec::Signature> make_signatures(int classes, uint64_t seed) {
    if (classes < 1) throw ConfigError("make_signatures: class count must be >= 1");
    // Lattice in (freq, amp, asym) with jitter well below the cell pitch, so
    // any two classes stay separated in at least one coordinate.
    const double f_step = 0.8, a_step = 0.09, s_step = 0.5;
    Rng rng(derive_seed(seed, 0x516e));
    std::vector<SynthSpec::Signature> sig(classes);
    for (int i = 0; i < classes; ++i) {
        int fi = i % 4, ai = (i / 4) % 3, si = i / 12;
        sig[i].freq = 1.0 + f_step * fi + rng.uniform(-0.1, 0.1);
        sig[i].amp = 0.10 + a_step * ai + rng.uniform(-0.01, 0.01);
        sig[i].asym = -0.75 + s_step * si + rng.uniform(-0.05, 0.05);
    }
    // Defensive: enforce the pairwise gap the lattice is supposed to provide.
    for (int i = 0; i < classes; ++i)
        for (int j = i + 1; j < classes; ++j) {
            double df = std::fabs(sig[i].freq - sig[j].freq) / f_step;
            double da = std::fabs(sig[i].amp - sig[j].amp) / a_step;
            double ds = std::fabs(sig[i].asym - sig[j].asym) / s_step;
            if (std::max({df, da, ds}) < 0.5)
                throw ConfigError("make_signatures: signature separation violated");
        }
    return sig;
}

SynthSample render_sequence(int cls, uint64_t seed, const SynthSpec& spec) {
    spec.validate();
    if (cls < 0 || cls >= spec.classes)
        throw ConfigError("render_sequence: class index out of range");
    const auto& sg = spec.signatures[cls];
    const int T = spec.frames, S = spec.size;

    Rng rng(derive_seed(seed, 0x7e4d, static_cast<uint64_t>(cls)));
    int len = static_cast<int>(rng.uniform_int(spec.span_min, spec.span_max));
    int t0 = static_cast<int>(rng.uniform_int(0, T - len));

    // One draw per nuisance knob, applied identically to every frame.
    double bright = rng.uniform(spec.brightness_lo, spec.brightness_hi);
    double dx = rng.uniform(-spec.jitter_px, spec.jitter_px);
    double dy = rng.uniform(-spec.jitter_px, spec.jitter_px);
    double scale = rng.uniform(spec.scale_lo, spec.scale_hi);

    SynthSample out;
    out.label = cls;
    out.seed = seed;
    out.mask.assign(T, 0);
    for (int t = t0; t < t0 + len; ++t) out.mask[t] = 1;
    out.video.resize(static_cast<size_t>(T) * S * S);

    const double cx = 0.5 * (S - 1) + dx;
    const double cy = 0.5 * (S - 1) + dy;
    const double rx = 0.28 * S * scale;
    // Waveform skew: asym > 0 spends longer opening than closing.
    const double gamma = std::pow(2.0, sg.asym);

    for (int t = 0; t < T; ++t) {
        double aperture = 0.0;
        if (out.mask[t]) {
            double u = len > 1 ? static_cast<double>(t - t0) / (len - 1) : 0.0;
            aperture = sg.amp * std::fabs(std::sin(M_PI * sg.freq * std::pow(u, gamma)));
        }
        double ry = (0.04 + aperture) * S * scale;
        double* frame = out.video.data() + static_cast<size_t>(t) * S * S;
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                double nx = (x - cx) / rx;
                double ny = (y - cy) / ry;
                double r = std::sqrt(nx * nx + ny * ny);
                // Background, bright lip ring, dark cavity; smooth edges.
                double band = std::exp(-(r - 1.0) * (r - 1.0) / (2.0 * 0.12 * 0.12));
                double inside = 1.0 / (1.0 + std::exp((r - 0.85) / 0.08));
                double v = 0.25;
                v += (0.75 - v) * band;
                v += (0.05 - v) * inside;
                v *= bright;
                if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
                frame[y * S + x] = std::clamp(v, 0.0, 1.0);
            }
    }
    return out;
}

static int split_count(int per_class, double frac, const char* name) {
    double exact = per_class * frac;
    int n = static_cast<int>(std::lround(exact));
    if (std::fabs(exact - n) > 1e-9)
        throw ConfigError(std::string("gen_dataset: per-class count for ") + name +
                          " split is not integral");
    return n;
}

SplitSet gen_dataset(const SynthSpec& spec, int per_class, double train_frac,
                     double val_frac, double test_frac, uint64_t master_seed) {
    spec.validate();
    if (per_class < 1) throw ConfigError("gen_dataset: per_class must be >= 1");
    if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ConfigError("gen_dataset: split fractions must sum to 1");
    int n_train = split_count(per_class, train_frac, "train");
    int n_val = split_count(per_class, val_frac, "val");
    int n_test = per_class - n_train - n_val;
    if (n_test < 0 || std::fabs(per_class * test_frac - n_test) > 1e-9)
        throw ConfigError("gen_dataset: per-class count for test split is not integral");

    SplitSet out;
    for (Dataset* ds : {&out.train, &out.val, &out.test}) {
        ds->frames = spec.frames;
        ds->size = spec.size;
        ds->classes = spec.classes;
    }
    // Per-class sample indices are consecutive across splits, so seeds are
    // disjoint by construction: train gets [0, n_train), val the next block...
    for (int c = 0; c < spec.classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            uint64_t seed = derive_seed(master_seed, 0xda7a, static_cast<uint64_t>(c),
                                        static_cast<uint64_t>(i));
            Dataset& dst = i < n_train           ? out.train
                           : i < n_train + n_val ? out.val
                                                 : out.test;
            dst.samples.push_back(render_sequence(c, seed, spec));
        }
    return out;
}

double mean_frame_centroid_accuracy(const Dataset& train, const Dataset& test) {
    if (train.samples.empty() || test.samples.empty())
        throw ConfigError("mean_frame_centroid_accuracy: empty split");
    const size_t px = static_cast<size_t>(train.size) * train.size;
    auto mean_frame = [px](const SynthSample& s, int T) {
        std::vector<double> m(px, 0.0);
        for (int t = 0; t < T; ++t)
            for (size_t p = 0; p < px; ++p) m[p] += s.video[t * px + p];
        for (double& v : m) v /= T;
        return m;
    };
    std::vector<std::vector<double>> centroid(train.classes, std::vector<double>(px, 0.0));
    std::vector<int> count(train.classes, 0);
    for (const auto& s : train.samples) {
        auto m = mean_frame(s, train.frames);
        for (size_t p = 0; p < px; ++p) centroid[s.label][p] += m[p];
        ++count[s.label];
    }
    for (int c = 0; c < train.classes; ++c) {
        if (count[c] == 0) throw ConfigError("mean_frame_centroid_accuracy: class missing");
        for (double& v : centroid[c]) v /= count[c];
    }
    int hit = 0;
    for (const auto& s : test.samples) {
        auto m = mean_frame(s, test.frames);
        int best = 0;
        double best_d = 0.0;
        for (int c = 0; c < train.classes; ++c) {
            double d = 0.0;
            for (size_t p = 0; p < px; ++p) {
                double e = m[p] - centroid[c][p];
                d += e * e;
            }
            if (c == 0 || d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == s.label) ++hit;
    }
    return static_cast<double>(hit) / test.samples.size();
}

// ---- ISND container ----

namespace {

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw DataFormatError("truncated dataset file: " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError("cannot open for writing: " + path);
    os.write("ISND", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<uint32_t>(ds.samples.size()));
    put_u32(os, static_cast<uint32_t>(ds.frames));
    put_u32(os, static_cast<uint32_t>(ds.size));
    put_u32(os, static_cast<uint32_t>(ds.classes));
    const size_t n_px = static_cast<size_t>(ds.frames) * ds.size * ds.size;
    std::vector<unsigned char> q(n_px);
    for (const auto& s : ds.samples) {
        if (s.video.size() != n_px || s.mask.size() != static_cast<size_t>(ds.frames))
            throw DataFormatError("save_dataset: sample shape mismatch");
        put_u32(os, static_cast<uint32_t>(s.label));
        os.write(reinterpret_cast<const char*>(s.mask.data()), ds.frames);
        for (size_t i = 0; i < n_px; ++i)
            q[i] = static_cast<unsigned char>(std::lround(std::clamp(s.video[i], 0.0, 1.0) * 255.0));
        os.write(reinterpret_cast<const char*>(q.data()), static_cast<std::streamsize>(n_px));
    }
    if (!os) throw DataFormatError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open dataset: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "ISND", 4) != 0)
        throw DataFormatError("bad dataset magic in " + path);
    uint32_t version = get_u32(is, path);
    if (version != 1) throw DataFormatError("unsupported dataset version in " + path);
    uint32_t count = get_u32(is, path);
    Dataset ds;
    ds.frames = static_cast<int>(get_u32(is, path));
    ds.size = static_cast<int>(get_u32(is, path));
    ds.classes = static_cast<int>(get_u32(is, path));
    if (ds.frames < 1 || ds.size < 1 || ds.classes < 1)
        throw DataFormatError("bad dataset header in " + path);
    const size_t n_px = static_cast<size_t>(ds.frames) * ds.size * ds.size;
    std::vector<unsigned char> q(n_px);
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        s.label = static_cast<int>(get_u32(is, path));
        if (s.label < 0 || s.label >= ds.classes)
            throw DataFormatError("label out of range in " + path);
        s.mask.resize(ds.frames);
        if (!is.read(reinterpret_cast<char*>(s.mask.data()), ds.frames))
            throw DataFormatError("truncated dataset file: " + path);
        for (uint8_t m : s.mask)
            if (m > 1) throw DataFormatError("bad mask byte in " + path);
        if (!is.read(reinterpret_cast<char*>(q.data()), static_cast<std::streamsize>(n_px)))
            throw DataFormatError("truncated dataset file: " + path);
        s.video.resize(n_px);
        for (size_t i = 0; i < n_px; ++i) s.video[i] = q[i] / 255.0;
    }
    return ds;
}

}  // namespace isn
