#include "isn/augment.hpp"

#include <cstring>

#include "isn/errors.hpp"

namespace isn {

std::vector<double> smoothed_targets(int y, int n, double eps) {
    if (n < 1) throw ConfigError("smoothed_targets: class count must be >= 1");
    if (y < 0 || y >= n) throw ConfigError("smoothed_targets: label out of range");
    if (eps < 0.0 || eps >= 1.0) throw ConfigError("smoothed_targets: eps must be in [0,1)");
    std::vector<double> q(n, eps / n);
    q[y] = 1.0 - (n - 1) * eps / n;
    return q;
}

std::vector<double> mixup_blend(const std::vector<double>& a, const std::vector<double>& b,
                                double lambda) {
    if (a.size() != b.size()) throw ShapeError("mixup_blend: size mismatch");
    std::vector<double> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
    return out;
}

void time_mask(std::vector<double>& video, int frames, int max_span, TimeMaskFill fill,
               Rng& rng) {
    if (frames < 1 || video.size() % static_cast<size_t>(frames) != 0)
        throw ShapeError("time_mask: video size not divisible by frame count");
    if (max_span < 1 || max_span > frames)
        throw ConfigError("time_mask: max_span must be in [1, frames]");
    const size_t px = video.size() / frames;
    int span = static_cast<int>(rng.uniform_int(1, max_span));
    int t0 = static_cast<int>(rng.uniform_int(0, frames - span));
    std::vector<double> repl(px, 0.0);
    if (fill == TimeMaskFill::MeanFrame) {
        for (int t = 0; t < frames; ++t)
            for (size_t p = 0; p < px; ++p) repl[p] += video[t * px + p];
        for (double& v : repl) v /= frames;
    }
    for (int t = t0; t < t0 + span; ++t)
        std::memcpy(video.data() + t * px, repl.data(), px * sizeof(double));
}

std::vector<double> crop_flip(const std::vector<double>& video, int frames, int size,
                              int crop, int off_y, int off_x, bool flip) {
    if (crop < 1 || crop > size) throw ConfigError("crop_flip: crop larger than frame");
    if (off_y < 0 || off_x < 0 || off_y + crop > size || off_x + crop > size)
        throw ConfigError("crop_flip: offset puts crop outside the frame");
    if (video.size() != static_cast<size_t>(frames) * size * size)
        throw ShapeError("crop_flip: video size mismatch");
    std::vector<double> out(static_cast<size_t>(frames) * crop * crop);
    for (int t = 0; t < frames; ++t) {
        const double* src = video.data() + static_cast<size_t>(t) * size * size;
        double* dst = out.data() + static_cast<size_t>(t) * crop * crop;
        for (int y = 0; y < crop; ++y)
            for (int x = 0; x < crop; ++x) {
                int sx = flip ? off_x + crop - 1 - x : off_x + x;
                dst[y * crop + x] = src[(off_y + y) * size + sx];
            }
    }
    return out;
}

std::vector<double> spatial_augment_train(const std::vector<double>& video, int frames,
                                          int size, int crop, bool random_crop,
                                          bool allow_flip, Rng& rng) {
    int off_y = (size - crop) / 2, off_x = (size - crop) / 2;
    if (random_crop) {
        off_y = static_cast<int>(rng.uniform_int(0, size - crop));
        off_x = static_cast<int>(rng.uniform_int(0, size - crop));
    }
    bool flip = allow_flip && rng.uniform() > 0.5;
    return crop_flip(video, frames, size, crop, off_y, off_x, flip);
}

std::vector<double> spatial_augment_eval(const std::vector<double>& video, int frames,
                                         int size, int crop) {
    return crop_flip(video, frames, size, crop, (size - crop) / 2, (size - crop) / 2, false);
}

}  // namespace isn
