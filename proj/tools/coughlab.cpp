// Command-line front end for the cough screening pipeline. Subcommands either
// operate on WAV files directly (preprocess, segment), run the pipeline up to
// a named stage (features .. fairness, pipeline), or re-render figures from a
// completed run directory.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coughlab/audio_io.hpp"
#include "coughlab/pipeline/config.hpp"
#include "coughlab/pipeline/figures.hpp"
#include "coughlab/pipeline/run.hpp"
#include "coughlab/preprocess.hpp"
#include "coughlab/segment.hpp"

namespace {

namespace fs = std::filesystem;

struct Args {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_given = false;
    std::vector<std::string> inputs;
};

void add_common(CLI::App* sub, Args& args) {
    sub->add_option("--config", args.config_path, "configuration file (key = value lines)");
    sub->add_option("--out", args.out_dir, "output directory");
    auto* seed = sub->add_option("--seed", args.seed, "seed overriding run.seed from the config");
    sub->parse_complete_callback([&args, seed] { args.seed_given |= seed->count() > 0; });
}

coughlab::PipelineConfig resolve_config(const Args& args) {
    coughlab::PipelineConfig cfg = args.config_path.empty()
                                       ? coughlab::PipelineConfig{}
                                       : coughlab::PipelineConfig::from_file(args.config_path);
    if (args.seed_given) {
        cfg.seed = args.seed;
        cfg.seed_set = true;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    return cfg;
}

int cmd_preprocess(const Args& args) {
    const auto cfg = resolve_config(args);
    if (args.out_dir.empty())
        throw coughlab::InvalidArgument("preprocess: pass --out for the processed WAV files");
    fs::create_directories(args.out_dir);
    for (const auto& path : args.inputs) {
        const auto w = coughlab::preprocess(coughlab::read_wav(path), cfg.preprocess);
        const auto dest = (fs::path(args.out_dir) / fs::path(path).filename()).string();
        coughlab::write_wav(dest, w, 16);
        std::printf("%s: %zu samples at %d Hz\n", dest.c_str(), w.samples.size(),
                    w.sample_rate_hz);
    }
    return 0;
}

int cmd_segment(const Args& args) {
    const auto cfg = resolve_config(args);
    std::string csv = "subject_id,segment_idx,start_sample,end_sample,duration_s\n";
    for (const auto& path : args.inputs) {
        const auto stem = fs::path(path).stem().string();
        const auto w = coughlab::preprocess(coughlab::read_wav(path), cfg.preprocess);
        const auto segments = coughlab::segment_coughs(w, cfg.segmenter, stem);
        int idx = 0;
        for (const auto& seg : segments) {
            char row[160];
            std::snprintf(row, sizeof(row), "%s,%d,%zu,%zu,%s\n", stem.c_str(), idx++,
                          seg.start_sample, seg.end_sample,
                          coughlab::format_real(seg.duration_s()).c_str());
            csv += row;
        }
        std::fprintf(stderr, "%s: %zu segments\n", stem.c_str(), segments.size());
    }
    if (args.out_dir.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        fs::create_directories(args.out_dir);
        const auto dest = (fs::path(args.out_dir) / "segments.csv").string();
        std::ofstream out(dest);
        out << csv;
        if (!out) throw coughlab::IoError("failed writing " + dest);
        std::printf("wrote %s\n", dest.c_str());
    }
    return 0;
}

int cmd_staged(const Args& args, coughlab::RunStage stage) {
    const auto cfg = resolve_config(args);
    const auto rr = coughlab::run_pipeline(cfg, stage);
    std::printf("run directory: %s\n", rr.out_dir.c_str());
    std::printf("subjects: %zu train, %zu test; segments: %d train, %d test\n",
                rr.split.train_ids.size(), rr.split.test_ids.size(), rr.train_segments,
                rr.test_segments);
    if (!rr.retained_features.empty())
        std::printf("retained features: %zu of %zu\n", rr.retained_features.size(),
                    coughlab::kNumFeatures);
    if (!rr.cv_mean_accuracy.empty()) {
        for (const auto& [family, acc] : rr.cv_mean_accuracy)
            std::printf("cv accuracy %s: %.4f\n", family.c_str(), acc);
        std::printf("best classical model: %s\n", rr.best_classical.c_str());
    }
    for (const auto& [model, acc] : rr.test_segment_accuracy)
        std::printf("test accuracy %s: %.4f segment, %.4f subject\n", model.c_str(), acc,
                    rr.test_subject_accuracy.at(model));
    return 0;
}

int cmd_figures(const Args& args) {
    if (args.out_dir.empty())
        throw coughlab::InvalidArgument("figures: pass --out with a completed run directory");
    for (const auto& path : coughlab::emit_figures(args.out_dir))
        std::printf("wrote %s\n", path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cough acoustics screening pipeline"};
    app.require_subcommand(1);
    Args args;

    auto* p_pre = app.add_subcommand("preprocess", "normalize, low-pass, and resample WAV files");
    p_pre->add_option("wav", args.inputs, "input WAV files")->required();
    auto* p_seg = app.add_subcommand("segment", "detect cough segments in WAV files");
    p_seg->add_option("wav", args.inputs, "input WAV files")->required();

    auto* p_feat = app.add_subcommand("features", "split the corpus and extract feature tables");
    auto* p_stats = app.add_subcommand("stats", "screen features on the training split");
    auto* p_train = app.add_subcommand("train", "grid-search, cross-validate, and fit models");
    auto* p_eval = app.add_subcommand("evaluate", "score the held-out test subjects");
    auto* p_expl = app.add_subcommand("explain", "attribute the best model's test decisions");
    auto* p_fair = app.add_subcommand("fairness", "audit equalized-odds differences");
    auto* p_pipe = app.add_subcommand("pipeline", "run everything and emit the full report");
    auto* p_figs = app.add_subcommand("figures", "re-render figures for a completed run");

    for (auto* sub : {p_pre, p_seg, p_feat, p_stats, p_train, p_eval, p_expl, p_fair, p_pipe, p_figs})
        add_common(sub, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (p_pre->parsed()) return cmd_preprocess(args);
        if (p_seg->parsed()) return cmd_segment(args);
        if (p_feat->parsed()) return cmd_staged(args, coughlab::RunStage::features);
        if (p_stats->parsed()) return cmd_staged(args, coughlab::RunStage::screen);
        if (p_train->parsed()) return cmd_staged(args, coughlab::RunStage::models);
        if (p_eval->parsed()) return cmd_staged(args, coughlab::RunStage::metrics);
        if (p_expl->parsed()) return cmd_staged(args, coughlab::RunStage::explain);
        if (p_fair->parsed()) return cmd_staged(args, coughlab::RunStage::fairness);
        if (p_pipe->parsed()) return cmd_staged(args, coughlab::RunStage::all);
        if (p_figs->parsed()) return cmd_figures(args);
        return 1;
    } catch (const coughlab::PipelineError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const coughlab::TrainingError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const coughlab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
