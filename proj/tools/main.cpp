#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "isn/checkpoint.hpp"
#include "isn/config.hpp"
#include "isn/train.hpp"
#include "isn/verify.hpp"

namespace fs = std::filesystem;
using namespace isn;

namespace {

void ensure_fresh(const fs::path& p, bool force) {
    if (!force && fs::exists(p))
        throw UsageError("output already exists (pass --force to overwrite): " + p.string());
}

// Builds the model a checkpoint was trained with and loads its weights.
struct LoadedModel {
    RunConfig rc;
    Model model;
};

LoadedModel load_model(const std::string& checkpoint_path) {
    CheckpointData ck = load_checkpoint(checkpoint_path);
    LoadedModel lm;
    lm.rc = parse_config_text(ck.config_text);
    lm.model.cfg = lm.rc.model;
    lm.model.cfg.validate();
    lm.model.build(lm.rc.train.seed);
    restore_into(lm.model.params, ck.params);
    return lm;
}

void check_dataset_matches(const Dataset& ds, const RunConfig& rc) {
    if (ds.classes != rc.model.dctcn.classes)
        throw DataFormatError("dataset class count does not match the model");
    if (rc.train.crop_size > ds.size)
        throw DataFormatError("dataset frames are smaller than the configured crop");
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, bool force) {
    RunConfig rc = load_config_file(config_path);
    SynthSpec spec = rc.synth_spec();
    fs::create_directories(out_dir);
    fs::path train_p = fs::path(out_dir) / "train.isnd";
    fs::path val_p = fs::path(out_dir) / "val.isnd";
    fs::path test_p = fs::path(out_dir) / "test.isnd";
    for (const fs::path& p : {train_p, val_p, test_p}) ensure_fresh(p, force);

    SplitSet splits =
        gen_dataset(spec, rc.per_class, rc.train_frac, rc.val_frac, rc.test_frac, rc.data_seed);
    save_dataset(splits.train, train_p.string());
    save_dataset(splits.val, val_p.string());
    save_dataset(splits.test, test_p.string());

    double health = mean_frame_centroid_accuracy(splits.train, splits.test);
    std::printf("wrote %zu/%zu/%zu samples to %s\n", splits.train.samples.size(),
                splits.val.samples.size(), splits.test.samples.size(), out_dir.c_str());
    std::printf("mean-frame centroid accuracy (health check): %.4f (chance %.4f)\n", health,
                1.0 / spec.classes);
    return 0;
}

struct TrainFlags {
    bool no_mixup = false, no_wb = false, no_ls = false, no_tm = false, no_attention = false;
};

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, bool force, const TrainFlags& flags) {
    RunConfig rc = load_config_file(config_path);
    if (flags.no_mixup) rc.train.use_mixup = false;
    if (flags.no_ls) rc.train.use_label_smoothing = false;
    if (flags.no_tm) rc.train.use_time_masking = false;
    if (flags.no_wb) {
        rc.train.use_word_boundary = false;
        rc.model.use_word_boundary = false;
    }
    if (flags.no_attention) rc.model.attention.layers = 0;
    rc.model.validate();
    rc.train.validate();

    Dataset train_ds = load_dataset((fs::path(data_dir) / "train.isnd").string());
    Dataset val_ds = load_dataset((fs::path(data_dir) / "val.isnd").string());
    check_dataset_matches(train_ds, rc);

    fs::create_directories(out_dir);
    fs::path ck_p = fs::path(out_dir) / "model.isnc";
    fs::path metrics_p = fs::path(out_dir) / "metrics.tsv";
    ensure_fresh(ck_p, force);
    ensure_fresh(metrics_p, force);

    Model model;
    model.cfg = rc.model;
    model.build(rc.train.seed);

    std::ofstream metrics(metrics_p);
    if (!metrics) throw DataFormatError("cannot open for writing: " + metrics_p.string());
    TrainResult r = train_model(model, train_ds, val_ds, rc.train, &metrics);

    save_checkpoint(ck_p.string(), r.best_params, emit_config(rc));
    std::printf("best validation top-1 %.4f at epoch %d\n", r.best_val_acc, r.best_epoch);
    std::printf("checkpoint: %s\nmetrics: %s\n", ck_p.string().c_str(),
                metrics_p.string().c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path) {
    LoadedModel lm = load_model(checkpoint_path);
    Dataset ds = load_dataset(data_path);
    check_dataset_matches(ds, lm.rc);
    EvalResult er = evaluate_model(lm.model, ds, lm.rc.train.crop_size);
    for (size_t c = 0; c < er.per_class_acc.size(); ++c)
        std::printf("class %zu: %.4f\n", c, er.per_class_acc[c]);
    std::printf("top1=%.4f\n", er.top1);
    return 0;
}

void write_heatmap_csv(const fs::path& p, const std::vector<double>& m, int T, bool force) {
    ensure_fresh(p, force);
    std::ofstream os(p);
    if (!os) throw DataFormatError("cannot open for writing: " + p.string());
    char buf[32];
    for (int r = 0; r < T; ++r) {
        for (int c = 0; c < T; ++c) {
            std::snprintf(buf, sizeof buf, "%.6f", m[static_cast<size_t>(r) * T + c]);
            os << buf << (c + 1 < T ? "," : "");
        }
        os << "\n";
    }
}

void write_heatmap_pgm(const fs::path& p, const std::vector<double>& m, int T, bool force) {
    ensure_fresh(p, force);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw DataFormatError("cannot open for writing: " + p.string());
    double mx = 0.0;
    for (double v : m) mx = std::max(mx, v);
    os << "P5\n" << T << " " << T << "\n255\n";
    for (double v : m)
        os.put(static_cast<char>(mx > 0.0 ? std::lround(255.0 * v / mx) : 0));
}

int cmd_heatmap(const std::string& checkpoint_path, const std::string& data_path, int sample,
                int layer, const std::string& out_prefix, bool force) {
    LoadedModel lm = load_model(checkpoint_path);
    Dataset ds = load_dataset(data_path);
    check_dataset_matches(ds, lm.rc);
    if (sample < 0 || sample >= static_cast<int>(ds.samples.size()))
        throw UsageError("--sample out of range (dataset has " +
                         std::to_string(ds.samples.size()) + " samples)");

    const SynthSample& s = ds.samples[static_cast<size_t>(sample)];
    int crop = lm.rc.train.crop_size;
    GraphCtx g(lm.model.params, /*train=*/false);
    auto vid = spatial_augment_eval(s.video, ds.frames, ds.size, crop);
    Tensor video = Tensor::constant({ds.frames, crop, crop, 1}, std::move(vid));
    std::vector<double> boundary;
    if (lm.model.cfg.use_word_boundary) boundary.assign(s.mask.begin(), s.mask.end());
    AttentionTrace trace;
    lm.model.forward(g, video, boundary, &trace);

    if (layer < 1 || layer > static_cast<int>(trace.layers.size()))
        throw ConfigError("--layer out of range (model has " +
                          std::to_string(trace.layers.size()) + " attention layers)");
    const AttentionTrace::Layer& L = trace.layers[static_cast<size_t>(layer - 1)];
    const int T = trace.T;

    std::string base = out_prefix + "_layer" + std::to_string(layer);
    for (size_t h = 0; h < L.head.size(); ++h) {
        std::string hb = base + "_head" + std::to_string(h);
        write_heatmap_csv(hb + ".csv", L.head[h], T, force);
        write_heatmap_pgm(hb + ".pgm", L.head[h], T, force);
    }
    write_heatmap_csv(base + "_avg.csv", L.head_avg, T, force);
    write_heatmap_pgm(base + "_avg.pgm", L.head_avg, T, force);

    std::vector<double> scores = key_frame_scores(trace, layer);
    fs::path scores_p = out_prefix + "_scores.csv";
    ensure_fresh(scores_p, force);
    std::ofstream os(scores_p);
    if (!os) throw DataFormatError("cannot open for writing: " + scores_p.string());
    char buf[48];
    for (int t = 0; t < T; ++t) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%d\n", t, scores[static_cast<size_t>(t)],
                      static_cast<int>(s.mask[static_cast<size_t>(t)]));
        os << buf;
    }
    std::printf("wrote %zu heatmap files with prefix %s\n", 2 * (L.head.size() + 1) + 1,
                out_prefix.c_str());
    return 0;
}

int cmd_verify(const std::string& suite) {
    std::vector<SuiteResult> results = run_suites(suite);
    std::cout << format_report(results);
    for (const auto& r : results)
        if (!r.ok()) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"InfoSyncNet-style visual speech recognition at desk scale"};
    app.require_subcommand(1);

    std::string config_path, data_path, out_path, checkpoint_path, out_prefix;
    std::string suite = "all";
    int sample = 0, layer = 1;
    bool force = false;
    TrainFlags flags;

    CLI::App* gen = app.add_subcommand("gen-data", "generate synthetic dataset splits");
    gen->add_option("--config", config_path, "run configuration file")->required();
    gen->add_option("--out", out_path, "output directory")->required();
    gen->add_flag("--force", force, "overwrite existing outputs");

    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", config_path, "run configuration file")->required();
    train->add_option("--data", data_path, "directory holding train/val/test.isnd")->required();
    train->add_option("--out", out_path, "output directory")->required();
    train->add_flag("--force", force, "overwrite existing outputs");
    train->add_flag("--no-mixup", flags.no_mixup, "disable mixup");
    train->add_flag("--no-wb", flags.no_wb, "disable the word-boundary input");
    train->add_flag("--no-ls", flags.no_ls, "disable label smoothing");
    train->add_flag("--no-tm", flags.no_tm, "disable time masking");
    train->add_flag("--no-attention", flags.no_attention, "bypass the attention stack (L=0)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    eval->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval->add_option("--data", data_path, "dataset file")->required();

    CLI::App* heatmap = app.add_subcommand("heatmap", "export attention heatmaps");
    heatmap->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    heatmap->add_option("--data", data_path, "dataset file")->required();
    heatmap->add_option("--sample", sample, "sample index")->required();
    heatmap->add_option("--layer", layer, "attention layer, 1-based")->required();
    heatmap->add_option("--out-prefix", out_prefix, "output path prefix")->required();
    heatmap->add_flag("--force", force, "overwrite existing outputs");

    CLI::App* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("--suite", suite, "grad|shapes|oracle|determinism|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(config_path, out_path, force);
        if (train->parsed()) return cmd_train(config_path, data_path, out_path, force, flags);
        if (eval->parsed()) return cmd_eval(checkpoint_path, data_path);
        if (heatmap->parsed())
            return cmd_heatmap(checkpoint_path, data_path, sample, layer, out_prefix, force);
        if (verify->parsed()) return cmd_verify(suite);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
