#pragma once

#include <cstdint>
#include <string>

#include "isn/params.hpp"

namespace isn {

// ISNC container (little-endian): magic "ISNC", u32 version, u32 entry count;
// per entry u16 path length + UTF-8 path, u8 rank, rank u32 dims, then f32
// data; trailing u32-length-prefixed UTF-8 config snapshot. Entries are
// written in lexicographic path order (the store's iteration order), so
// save -> load -> save is byte-identical.
struct CheckpointData {
    uint32_t version = 1;
    ParamStore params;
    std::string config_text;
};

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_text);

CheckpointData load_checkpoint(const std::string& path);

// Copies values from a loaded checkpoint into a freshly built model store.
// The two path sets must match exactly, shapes included; extra or missing
// entries are format errors.
void restore_into(ParamStore& dst, const ParamStore& src);

}  // namespace isn
