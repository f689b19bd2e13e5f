#include "isn/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "isn/errors.hpp"

namespace isn {

SynthSpec RunConfig::synth_spec() const {
    SynthSpec s = data;
    s.signatures = make_signatures(s.classes, signature_seed);
    return s;
}

namespace {

[[noreturn]] void bad_value(int line, const std::string& key) {
    throw ConfigError("line " + std::to_string(line) + ": bad value for key '" + key + "'");
}

int64_t parse_i64(const std::string& s, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty()) bad_value(line, key);
    return v;
}

uint64_t parse_u64(const std::string& s, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty() || s[0] == '-')
        bad_value(line, key);
    return v;
}

double parse_f64(const std::string& s, int line, const std::string& key) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || end != s.c_str() + s.size() || s.empty()) bad_value(line, key);
    return v;
}

bool parse_bool(const std::string& s, int line, const std::string& key) {
    if (s == "true") return true;
    if (s == "false") return false;
    bad_value(line, key);
}

std::vector<int> parse_int_list(const std::string& s, int line, const std::string& key) {
    std::vector<int> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_i64(item, line, key)));
    if (out.empty()) bad_value(line, key);
    return out;
}

std::string fmt_f64(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

struct FieldDef {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&, int)> set;
};

template <typename Acc>
FieldDef fi(std::string key, Acc acc) {
    return {key, [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v, int ln) {
                acc(c) = static_cast<int>(parse_i64(v, ln, key));
            }};
}

template <typename Acc>
FieldDef fu(std::string key, Acc acc) {
    return {key, [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v, int ln) { acc(c) = parse_u64(v, ln, key); }};
}

template <typename Acc>
FieldDef fd(std::string key, Acc acc) {
    return {key, [acc](const RunConfig& c) { return fmt_f64(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v, int ln) { acc(c) = parse_f64(v, ln, key); }};
}

template <typename Acc>
FieldDef fb(std::string key, Acc acc) {
    return {key,
            [acc](const RunConfig& c) {
                return acc(const_cast<RunConfig&>(c)) ? std::string("true") : std::string("false");
            },
            [acc, key](RunConfig& c, const std::string& v, int ln) { acc(c) = parse_bool(v, ln, key); }};
}

template <typename Acc>
FieldDef fl(std::string key, Acc acc) {
    return {key, [acc](const RunConfig& c) { return fmt_int_list(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, const std::string& v, int ln) {
                acc(c) = parse_int_list(v, ln, key);
            }};
}

template <typename Acc>
FieldDef fa2(std::string key, Acc acc) {
    return {key,
            [acc](const RunConfig& c) {
                const auto& a = acc(const_cast<RunConfig&>(c));
                return fmt_int_list({a[0], a[1]});
            },
            [acc, key](RunConfig& c, const std::string& v, int ln) {
                auto list = parse_int_list(v, ln, key);
                if (list.size() != 2) bad_value(ln, key);
                auto& a = acc(c);
                a = {list[0], list[1]};
            }};
}

template <typename Acc>
FieldDef fa3(std::string key, Acc acc) {
    return {key,
            [acc](const RunConfig& c) {
                const auto& a = acc(const_cast<RunConfig&>(c));
                return fmt_int_list({a[0], a[1], a[2]});
            },
            [acc, key](RunConfig& c, const std::string& v, int ln) {
                auto list = parse_int_list(v, ln, key);
                if (list.size() != 3) bad_value(ln, key);
                auto& a = acc(c);
                a = {list[0], list[1], list[2]};
            }};
}

const std::vector<FieldDef>& field_table() {
    static const std::vector<FieldDef> table = [] {
        std::vector<FieldDef> t;
        auto& F = t;  // brevity below

        F.push_back(fi("frontend.stem_channels",
                       [](RunConfig& c) -> int& { return c.model.frontend.stem_channels; }));
        F.push_back(fa3("frontend.stem_kernel",
                        [](RunConfig& c) -> std::array<int, 3>& { return c.model.frontend.stem_kernel; }));
        F.push_back(fa3("frontend.stem_stride",
                        [](RunConfig& c) -> std::array<int, 3>& { return c.model.frontend.stem_stride; }));
        F.push_back(fa3("frontend.pool_kernel",
                        [](RunConfig& c) -> std::array<int, 3>& { return c.model.frontend.pool_kernel; }));
        F.push_back(fa3("frontend.pool_stride",
                        [](RunConfig& c) -> std::array<int, 3>& { return c.model.frontend.pool_stride; }));
        F.push_back(fl("frontend.stage_channels",
                       [](RunConfig& c) -> std::vector<int>& { return c.model.frontend.stage_channels; }));
        F.push_back(fi("frontend.blocks_per_stage",
                       [](RunConfig& c) -> int& { return c.model.frontend.blocks_per_stage; }));
        F.push_back(fi("frontend.se_reduction",
                       [](RunConfig& c) -> int& { return c.model.frontend.se_reduction; }));

        F.push_back(fi("attention.layers",
                       [](RunConfig& c) -> int& { return c.model.attention.layers; }));
        F.push_back(fi("attention.heads",
                       [](RunConfig& c) -> int& { return c.model.attention.heads; }));
        F.push_back(fi("attention.d_model",
                       [](RunConfig& c) -> int& { return c.model.attention.d_model; }));
        F.push_back(fi("attention.d_ff",
                       [](RunConfig& c) -> int& { return c.model.attention.d_ff; }));
        F.push_back(fb("attention.positional_encoding", [](RunConfig& c) -> bool& {
            return c.model.attention.positional_encoding;
        }));

        F.push_back(fi("dctcn.num_blocks",
                       [](RunConfig& c) -> int& { return c.model.dctcn.num_blocks; }));
        F.push_back(fi("dctcn.layers_per_block",
                       [](RunConfig& c) -> int& { return c.model.dctcn.layers_per_block; }));
        F.push_back(fi("dctcn.growth", [](RunConfig& c) -> int& { return c.model.dctcn.growth; }));
        F.push_back(fi("dctcn.width", [](RunConfig& c) -> int& { return c.model.dctcn.width; }));
        F.push_back(fa2("dctcn.branch_kernels",
                        [](RunConfig& c) -> std::array<int, 2>& { return c.model.dctcn.branch_kernels; }));
        F.push_back(fl("dctcn.dilations",
                       [](RunConfig& c) -> std::vector<int>& { return c.model.dctcn.dilations; }));
        F.push_back(fi("dctcn.classes", [](RunConfig& c) -> int& { return c.model.dctcn.classes; }));
        F.push_back(fi("dctcn.se_reduction",
                       [](RunConfig& c) -> int& { return c.model.dctcn.se_reduction; }));

        F.push_back(fi("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; }));
        F.push_back(fi("train.batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }));
        F.push_back(fd("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }));
        F.push_back(fd("train.weight_decay",
                       [](RunConfig& c) -> double& { return c.train.weight_decay; }));
        F.push_back(fd("train.smoothing", [](RunConfig& c) -> double& { return c.train.smoothing; }));
        F.push_back(fd("train.mixup_alpha",
                       [](RunConfig& c) -> double& { return c.train.mixup_alpha; }));
        F.push_back(fb("train.use_mixup", [](RunConfig& c) -> bool& { return c.train.use_mixup; }));
        F.push_back(fb("train.use_time_masking",
                       [](RunConfig& c) -> bool& { return c.train.use_time_masking; }));
        F.push_back({"train.tm_fill",
                     [](const RunConfig& c) {
                         return c.train.tm_fill == TimeMaskFill::MeanFrame
                                    ? std::string("mean-frame")
                                    : std::string("zeros");
                     },
                     [](RunConfig& c, const std::string& v, int ln) {
                         if (v == "mean-frame")
                             c.train.tm_fill = TimeMaskFill::MeanFrame;
                         else if (v == "zeros")
                             c.train.tm_fill = TimeMaskFill::Zeros;
                         else
                             bad_value(ln, "train.tm_fill");
                     }});
        F.push_back(fi("train.tm_max_span", [](RunConfig& c) -> int& { return c.train.tm_max_span; }));
        // One key drives both the model's input channel and the loop's toggle.
        F.push_back({"train.use_word_boundary",
                     [](const RunConfig& c) {
                         return c.train.use_word_boundary ? std::string("true")
                                                          : std::string("false");
                     },
                     [](RunConfig& c, const std::string& v, int ln) {
                         bool b = parse_bool(v, ln, "train.use_word_boundary");
                         c.train.use_word_boundary = b;
                         c.model.use_word_boundary = b;
                     }});
        F.push_back(fb("train.use_label_smoothing",
                       [](RunConfig& c) -> bool& { return c.train.use_label_smoothing; }));
        F.push_back(fb("train.use_flip", [](RunConfig& c) -> bool& { return c.train.use_flip; }));
        F.push_back(fb("train.use_random_crop",
                       [](RunConfig& c) -> bool& { return c.train.use_random_crop; }));
        F.push_back(fi("train.crop_size", [](RunConfig& c) -> int& { return c.train.crop_size; }));
        F.push_back(fb("train.cosine_schedule",
                       [](RunConfig& c) -> bool& { return c.train.cosine_schedule; }));
        F.push_back(fi("train.warmup_epochs",
                       [](RunConfig& c) -> int& { return c.train.warmup_epochs; }));
        F.push_back(fu("train.seed", [](RunConfig& c) -> uint64_t& { return c.train.seed; }));

        F.push_back(fi("data.classes", [](RunConfig& c) -> int& { return c.data.classes; }));
        F.push_back(fi("data.frames", [](RunConfig& c) -> int& { return c.data.frames; }));
        F.push_back(fi("data.size", [](RunConfig& c) -> int& { return c.data.size; }));
        F.push_back(fi("data.span_min", [](RunConfig& c) -> int& { return c.data.span_min; }));
        F.push_back(fi("data.span_max", [](RunConfig& c) -> int& { return c.data.span_max; }));
        F.push_back(fd("data.brightness_lo",
                       [](RunConfig& c) -> double& { return c.data.brightness_lo; }));
        F.push_back(fd("data.brightness_hi",
                       [](RunConfig& c) -> double& { return c.data.brightness_hi; }));
        F.push_back(fd("data.jitter_px", [](RunConfig& c) -> double& { return c.data.jitter_px; }));
        F.push_back(fd("data.scale_lo", [](RunConfig& c) -> double& { return c.data.scale_lo; }));
        F.push_back(fd("data.scale_hi", [](RunConfig& c) -> double& { return c.data.scale_hi; }));
        F.push_back(fd("data.noise_sigma",
                       [](RunConfig& c) -> double& { return c.data.noise_sigma; }));
        F.push_back(fi("data.per_class", [](RunConfig& c) -> int& { return c.per_class; }));
        F.push_back(fd("data.train_frac", [](RunConfig& c) -> double& { return c.train_frac; }));
        F.push_back(fd("data.val_frac", [](RunConfig& c) -> double& { return c.val_frac; }));
        F.push_back(fd("data.test_frac", [](RunConfig& c) -> double& { return c.test_frac; }));
        F.push_back(fu("data.seed", [](RunConfig& c) -> uint64_t& { return c.data_seed; }));
        F.push_back(
            fu("data.signature_seed", [](RunConfig& c) -> uint64_t& { return c.signature_seed; }));
        return t;
    }();
    return table;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string section_of(const std::string& key) { return key.substr(0, key.find('.')); }

}  // namespace

std::string emit_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : field_table()) {
        std::string s = section_of(f.key);
        if (s != section) {
            if (!out.empty()) out += '\n';
            out += "# " + s + "\n";
            section = s;
        }
        out += f.key + " = " + f.get(cfg) + "\n";
    }
    return out;
}

RunConfig parse_config_text(const std::string& text) {
    static const std::map<std::string, const FieldDef*> index = [] {
        std::map<std::string, const FieldDef*> m;
        for (const auto& f : field_table()) m[f.key] = &f;
        return m;
    }();

    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = raw;
        if (size_t hash = s.find('#'); hash != std::string::npos) s.resize(hash);
        s = trim(s);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        auto it = index.find(key);
        if (it == index.end())
            throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
        it->second->set(cfg, value, line);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace isn
