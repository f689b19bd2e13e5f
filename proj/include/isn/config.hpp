#pragma once

#include <string>

#include "isn/datagen.hpp"
#include "isn/model.hpp"
#include "isn/train.hpp"

namespace isn {

// Everything one run needs, covering the model, training loop, and data
// generator. Serialized as line-oriented `key = value` text with `#`
// comments; parse(emit(cfg)) reproduces cfg exactly.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SynthSpec data;  // signatures left empty; derive via synth_spec()
    int per_class = 200;
    double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
    uint64_t data_seed = 42;
    uint64_t signature_seed = 7;

    // The generator spec with class signatures filled in.
    SynthSpec synth_spec() const;
};

std::string emit_config(const RunConfig& cfg);

// Rejects unknown and duplicate keys; error messages carry 1-based line
// numbers. The word-boundary toggle is a single key that drives both the
// model input channel and the training loop.
RunConfig parse_config_text(const std::string& text);

RunConfig load_config_file(const std::string& path);

}  // namespace isn
