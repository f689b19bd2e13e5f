#pragma once

#include <vector>

#include "isn/rng.hpp"

namespace isn {

// Label smoothing: q_y = 1 - (N-1)*eps/N, q_other = eps/N. eps=0 gives one-hot.
std::vector<double> smoothed_targets(int y, int n, double eps);

// Elementwise lambda*a + (1-lambda)*b; sizes must agree.
std::vector<double> mixup_blend(const std::vector<double>& a, const std::vector<double>& b,
                                double lambda);

enum class TimeMaskFill { MeanFrame, Zeros };

// Replaces one contiguous frame span (length uniform in [1, max_span]) with
// the sequence's mean frame or zeros, in place. Frames outside the span are
// untouched; the caller's boundary mask is never modified here.
void time_mask(std::vector<double>& video, int frames, int max_span, TimeMaskFill fill,
               Rng& rng);

// Crop every frame to crop*crop at (off_y, off_x), optionally mirroring x.
// The same offsets and flip decision apply to all frames of the clip.
std::vector<double> crop_flip(const std::vector<double>& video, int frames, int size,
                              int crop, int off_y, int off_x, bool flip);

// Training path: one random offset pair, then one flip draw (skipped when the
// corresponding toggle is off, keeping draw streams stable per setting).
std::vector<double> spatial_augment_train(const std::vector<double>& video, int frames,
                                          int size, int crop, bool random_crop,
                                          bool allow_flip, Rng& rng);

// Evaluation path: center crop, never flipped.
std::vector<double> spatial_augment_eval(const std::vector<double>& video, int frames,
                                         int size, int crop);

}  // namespace isn
