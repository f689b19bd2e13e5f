#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace isn {

// Procedural generator of labeled grayscale "lip-motion" clips. Each class is
// a distinct mouth-motion signature (aperture frequency, amplitude, asymmetry);
// the motion plays only inside a random active span, and a per-frame boundary
// mask marks that span. Everything is deterministic per (class, seed, spec).
struct SynthSpec {
    int classes = 10;
    int frames = 29;       // T
    int size = 32;         // S (frames are S x S)
    int span_min = 8;      // T_min, >= 3
    int span_max = 24;     // T_max, <= T

    // Nuisance ranges; each sample draws one value per knob.
    double brightness_lo = 0.85, brightness_hi = 1.15;
    double jitter_px = 1.5;          // spatial offset, uniform in [-j, j]
    double scale_lo = 0.9, scale_hi = 1.1;
    double noise_sigma = 0.02;       // additive pixel noise

    // Per-class motion signatures, filled by make_signatures().
    struct Signature {
        double freq;   // aperture oscillations per active span
        double amp;    // peak vertical aperture, fraction of frame
        double asym;   // open/close asymmetry in [-1, 1]
    };
    std::vector<Signature> signatures;

    void validate() const;
};

// Builds `classes` pairwise-separated signatures on a jittered grid.
// Deterministic per (classes, seed); enforces a minimum parameter-space gap.
std::vector<SynthSpec::Signature> make_signatures(int classes, uint64_t seed);

struct SynthSample {
    std::vector<double> video;   // T*S*S, values in [0,1], row-major [t][y][x]
    std::vector<uint8_t> mask;   // T entries, 1 exactly on the active span
    int label = 0;
    uint64_t seed = 0;
};

SynthSample render_sequence(int cls, uint64_t seed, const SynthSpec& spec);

struct Dataset {
    int frames = 0, size = 0, classes = 0;
    std::vector<SynthSample> samples;
};

// Class-balanced splits with disjoint per-sample seeds; fractions must sum
// to 1 and each split must receive a whole number of samples per class.
struct SplitSet {
    Dataset train, val, test;
};
SplitSet gen_dataset(const SynthSpec& spec, int per_class, double train_frac,
                     double val_frac, double test_frac, uint64_t master_seed);

// Nearest-centroid accuracy on mean-frame features; the dataset health check
// wants this strictly between chance and 1.0 on noise-free data.
double mean_frame_centroid_accuracy(const Dataset& train, const Dataset& test);

// ISND container (little-endian): magic "ISND", u32 version=1, u32 count,
// u32 T, u32 S, u32 C4; per sample u32 label, T mask bytes, T*S*S u8 pixels
// quantized as round(v*255). Loading dequantizes with /255.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace isn
