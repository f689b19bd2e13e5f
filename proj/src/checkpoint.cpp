#include "isn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "isn/errors.hpp"

namespace isn {

namespace {

void put_u16(std::ostream& os, uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

uint16_t get_u16(std::istream& is, const std::string& path) {
    unsigned char b[2];
    if (!is.read(reinterpret_cast<char*>(b), 2))
        throw DataFormatError("truncated checkpoint: " + path);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw DataFormatError("truncated checkpoint: " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is, const std::string& path) {
    uint32_t bits = get_u32(is, path);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::string& config_text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataFormatError("cannot open for writing: " + path);
    os.write("ISNC", 4);
    put_u32(os, 1);
    put_u32(os, static_cast<uint32_t>(params.entries().size()));
    for (const auto& [name, e] : params.entries()) {
        if (name.size() > std::numeric_limits<uint16_t>::max())
            throw DataFormatError("parameter path too long: " + name);
        if (e.shape.size() > 255) throw DataFormatError("parameter rank too large: " + name);
        put_u16(os, static_cast<uint16_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        os.put(static_cast<char>(e.shape.size()));
        for (int d : e.shape) put_u32(os, static_cast<uint32_t>(d));
        for (double v : e.value) put_f32(os, static_cast<float>(v));
    }
    put_u32(os, static_cast<uint32_t>(config_text.size()));
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    if (!os) throw DataFormatError("write failed: " + path);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataFormatError("cannot open checkpoint: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "ISNC", 4) != 0)
        throw DataFormatError("bad checkpoint magic in " + path);
    CheckpointData ck;
    ck.version = get_u32(is, path);
    if (ck.version != 1) throw DataFormatError("unsupported checkpoint version in " + path);
    uint32_t count = get_u32(is, path);
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = get_u16(is, path);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) throw DataFormatError("truncated checkpoint: " + path);
        int rank = is.get();
        if (rank < 0) throw DataFormatError("truncated checkpoint: " + path);
        Shape shape(static_cast<size_t>(rank));
        for (int& d : shape) d = static_cast<int>(get_u32(is, path));
        if (ck.params.has(name))
            throw DataFormatError("duplicate parameter path in " + path + ": " + name);
        ParamEntry& e = ck.params.declare(name, shape);
        for (double& v : e.value) v = get_f32(is, path);
    }
    uint32_t text_len = get_u32(is, path);
    ck.config_text.resize(text_len);
    if (text_len && !is.read(ck.config_text.data(), text_len))
        throw DataFormatError("truncated checkpoint: " + path);
    return ck;
}

void restore_into(ParamStore& dst, const ParamStore& src) {
    if (dst.entries().size() != src.entries().size())
        throw DataFormatError("checkpoint parameter set does not match the model");
    for (auto& [name, e] : dst.entries()) {
        if (!src.has(name)) throw DataFormatError("checkpoint is missing parameter " + name);
        const ParamEntry& s = src.at(name);
        if (s.shape != e.shape)
            throw DataFormatError("checkpoint shape mismatch at " + name);
        e.value = s.value;
    }
}

}  // namespace isn
