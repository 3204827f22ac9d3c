// End-to-end run: manifest -> split -> preprocess/segment/features ->
// train-only stats and pruning -> grid-search CV -> final fits -> test
// metrics -> SHAP -> fairness -> figures. Every feature-row read goes
// through an access log so tests can prove which stage saw which subject.
#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"
#include "coughlab/fairness.hpp"
#include "coughlab/feature_vector.hpp"
#include "coughlab/ml/cv.hpp"
#include "coughlab/ml/model_io.hpp"
#include "coughlab/nn/network.hpp"
#include "coughlab/pipeline/config.hpp"
#include "coughlab/pipeline/figures.hpp"
#include "coughlab/pipeline/split.hpp"
#include "coughlab/preprocess.hpp"
#include "coughlab/segment.hpp"
#include "coughlab/shap.hpp"
#include "coughlab/spectrogram.hpp"
#include "coughlab/stats.hpp"

namespace coughlab {

struct PipelineError : Error {
    using Error::Error;
};

// Stop points for partial runs; each later stage includes everything before
// it. `all` additionally writes the run manifest and figures.
enum class RunStage { split, features, screen, models, metrics, explain, fairness, all };

struct AccessLog {
    std::string stage = "setup";
    std::map<std::string, std::set<std::string>> subjects_by_stage;

    void enter(const std::string& s) { stage = s; }
    void note(const std::string& subject) { subjects_by_stage[stage].insert(subject); }

    std::set<std::string> touched(const std::string& s) const {
        auto it = subjects_by_stage.find(s);
        return it == subjects_by_stage.end() ? std::set<std::string>{} : it->second;
    }
};

// Every row access is recorded against the log's current stage.
class AuditedTable {
public:
    AuditedTable(const FeatureTable& table, AccessLog& log) : table_(table), log_(log) {}
    size_t size() const { return table_.rows.size(); }
    const FeatureRow& row(size_t i) const {
        log_.note(table_.rows[i].subject_id);
        return table_.rows[i];
    }

private:
    const FeatureTable& table_;
    AccessLog& log_;
};

struct RunResult {
    std::string out_dir;
    CorpusSplit split;
    std::vector<std::string> retained_features;
    std::map<std::string, double> cv_mean_accuracy;       // family -> winning grid point
    std::map<std::string, double> test_segment_accuracy;  // family (and "cnn")
    std::map<std::string, double> test_subject_accuracy;
    std::string best_classical;
    int train_segments = 0;
    int test_segments = 0;
    AccessLog access;
};

namespace run_detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", round_to(v, 2));
    return buf;
}

inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string join(const std::vector<std::string>& xs, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
    return out;
}

// majority vote over a subject's segment predictions, ties to cancer
inline int majority_vote(int votes_cancer, int votes_total) {
    return 2 * votes_cancer >= votes_total ? 1 : 0;
}

struct PredRec {
    std::string model, subject;
    int segment_idx = 0, truth = 0, pred = 0;
};

struct SubjectPredRec {
    std::string model, subject;
    int truth = 0, pred = 0, votes_cancer = 0, votes_total = 0;
};

inline void append_metrics_row(std::string& csv, const std::string& model,
                               const std::string& granularity, const ml::Metrics& m) {
    csv += model + "," + granularity + "," + fmt2(m.accuracy) + "," + fmt2(m.healthy.precision) +
           "," + fmt2(m.healthy.recall) + "," + fmt2(m.healthy.f1) + "," +
           fmt2(m.cancer.precision) + "," + fmt2(m.cancer.recall) + "," + fmt2(m.cancer.f1) + "," +
           fmt2(m.macro_precision) + "," + fmt2(m.macro_recall) + "," + fmt2(m.macro_f1) + "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoError("failed writing: " + path.string());
}

}  // namespace run_detail

inline RunResult run_pipeline(const PipelineConfig& cfg, RunStage stop_after = RunStage::all) {
    namespace fs = std::filesystem;
    using run_detail::fmt2;
    using run_detail::fmt4;

    // ---- validation, before anything is written ----
    cfg.validate();
    if (cfg.manifest_path.empty()) throw InvalidArgument("config: corpus.manifest missing");
    if (cfg.out_dir.empty()) throw InvalidArgument("config: run.out_dir missing (pass --out)");
    const auto records = load_manifest(cfg.manifest_path);
    const fs::path corpus_root = fs::path(cfg.manifest_path).parent_path();

    RunResult rr;
    rr.out_dir = cfg.out_dir;
    rr.split = split_corpus(records, cfg.test_fraction, cfg.seed);
    AccessLog& log = rr.access;

    std::map<std::string, const SubjectRecord*> rec_of;
    for (const auto& r : records) rec_of[r.subject_id] = &r;

    auto guard = [&log](const char* name, auto&& fn) {
        log.enter(name);
        try {
            fn();
        } catch (const PipelineError&) {
            throw;
        } catch (const Error& e) {
            throw PipelineError("stage '" + std::string(name) + "': " + e.what());
        } catch (const std::exception& e) {
            throw PipelineError("stage '" + std::string(name) + "': " + e.what());
        }
    };

    auto reached = [&](RunStage s) {
        if (static_cast<int>(stop_after) > static_cast<int>(s)) return false;
        log.enter("done");
        return true;
    };

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);

    // ---- split table ----
    guard("split", [&] {
        std::string csv = "subject_id,label,split\n";
        for (const auto& r : records)
            csv += r.subject_id + "," + to_string(r.label) + "," +
                   (rr.split.in_test(r.subject_id) ? "test" : "train") + "\n";
        run_detail::write_text(out / "split.csv", csv);
    });
    if (reached(RunStage::split)) return rr;

    // ---- preprocess, segment, features, spectrograms ----
    FeatureTable table;
    std::vector<SpectrogramImage> images;
    guard("features", [&] {
        std::vector<std::string> silent;
        for (const auto& rec : records) {
            fs::path audio(rec.audio_path);
            if (audio.is_relative()) audio = corpus_root / audio;
            const Waveform w = preprocess(read_wav(audio.string()), cfg.preprocess);
            const auto segments = segment_coughs(w, cfg.segmenter, rec.subject_id);
            if (segments.empty()) {
                silent.push_back(rec.subject_id);
                continue;
            }
            int idx = 0;
            for (const auto& seg : segments) {
                FeatureRow row;
                row.subject_id = rec.subject_id;
                row.segment_idx = idx;
                row.label = rec.label;
                row.features = feature_vector(seg, cfg.features);
                table.rows.push_back(std::move(row));
                images.push_back(mel_spectrogram_image(seg, cfg.mel));
                if (cfg.save_rasters) {
                    fs::create_directories(out / "rasters");
                    write_raster((out / "rasters" /
                                  (rec.subject_id + "_" + std::to_string(idx) + ".raster"))
                                     .string(),
                                 images.back());
                }
                ++idx;
            }
        }
        if (!silent.empty())
            throw DegenerateInput("no coughs segmented for subjects: " +
                                  run_detail::join(silent, " "));
        write_feature_table((out / "features.csv").string(), table);
    });

    const AuditedTable audited(table, log);
    std::vector<size_t> train_rows, test_rows;
    for (size_t i = 0; i < table.rows.size(); ++i)
        (rr.split.in_test(table.rows[i].subject_id) ? test_rows : train_rows).push_back(i);
    rr.train_segments = static_cast<int>(train_rows.size());
    rr.test_segments = static_cast<int>(test_rows.size());
    if (reached(RunStage::features)) return rr;

    const auto& schema = feature_names();

    // ---- train-only screening statistics ----
    std::vector<TestResult> feature_tests(kNumFeatures);
    std::vector<bool> significant(kNumFeatures, false);
    guard("stats", [&] {
        std::vector<std::vector<double>> cancer_vals(kNumFeatures), healthy_vals(kNumFeatures);
        for (size_t i : train_rows) {
            const FeatureRow& row = audited.row(i);
            auto& dst = row.label == Label::cancer ? cancer_vals : healthy_vals;
            for (size_t f = 0; f < kNumFeatures; ++f) dst[f].push_back(row.features[f]);
        }
        if (cancer_vals[0].empty() || healthy_vals[0].empty())
            throw DegenerateInput("training split lacks one of the classes");

        std::string csv = "feature,u_statistic,p_value,significant\n";
        for (size_t f = 0; f < kNumFeatures; ++f) {
            feature_tests[f] = mann_whitney_u(cancer_vals[f], healthy_vals[f]);
            significant[f] = feature_tests[f].p_value < cfg.alpha;
            csv += schema[f] + "," + format_real(feature_tests[f].statistic) + "," +
                   format_real(feature_tests[f].p_value) + "," +
                   (significant[f] ? "true" : "false") + "\n";
        }
        run_detail::write_text(out / "stats.csv", csv);

        // demographic composition of the training split
        double sex_counts[2][2] = {{0, 0}, {0, 0}};       // label x {male,female}
        double smoke_counts[2][3] = {{0, 0, 0}, {0, 0, 0}};  // label x {ever,never,not_given}
        for (const auto& id : rr.split.train_ids) {
            log.note(id);
            const SubjectRecord& r = *rec_of.at(id);
            const int li = r.label == Label::cancer ? 1 : 0;
            sex_counts[li][r.sex == Sex::male ? 0 : 1] += 1.0;
            smoke_counts[li][r.smoking == Smoking::ever ? 0
                             : r.smoking == Smoking::never ? 1
                                                           : 2] += 1.0;
        }
        std::string demo = "attribute,statistic,p_value\n";
        auto try_test = [&demo](const char* name, const std::vector<std::vector<double>>& t) {
            try {
                const auto res = chi_square(t);
                demo += std::string(name) + "," + format_real(res.statistic) + "," +
                        format_real(res.p_value) + "\n";
            } catch (const InvalidArgument&) {
                // empty marginal on a tiny corpus: leave the row out
            }
        };
        try_test("sex", {{sex_counts[0][0], sex_counts[0][1]},
                         {sex_counts[1][0], sex_counts[1][1]}});
        std::vector<std::vector<double>> smoke(2);
        for (int c = 0; c < 3; ++c) {
            if (smoke_counts[0][c] + smoke_counts[1][c] == 0.0) continue;  // absent category
            smoke[0].push_back(smoke_counts[0][c]);
            smoke[1].push_back(smoke_counts[1][c]);
        }
        if (smoke[0].size() >= 2) try_test("smoking", smoke);
        run_detail::write_text(out / "demographics.csv", demo);
    });

    // ---- collinearity pruning over the significant features ----
    CorrelationReport corr;
    std::vector<size_t> retained_idx;
    guard("prune", [&] {
        std::vector<std::string> sig_names;
        std::vector<size_t> sig_idx;
        for (size_t f = 0; f < kNumFeatures; ++f)
            if (significant[f]) {
                sig_names.push_back(schema[f]);
                sig_idx.push_back(f);
            }
        if (sig_names.empty())
            throw DegenerateInput("no feature passed the significance screen at alpha = " +
                                  format_real(cfg.alpha));

        std::vector<std::vector<double>> rows;
        rows.reserve(train_rows.size());
        for (size_t i : train_rows) {
            const FeatureRow& row = audited.row(i);
            std::vector<double> v(sig_idx.size());
            for (size_t j = 0; j < sig_idx.size(); ++j) v[j] = row.features[sig_idx[j]];
            rows.push_back(std::move(v));
        }
        corr = prune_collinear(pearson_matrix(rows, sig_names), cfg.prune_threshold);
        rr.retained_features = corr.retained;
        for (const auto& name : corr.retained)
            for (size_t f = 0; f < kNumFeatures; ++f)
                if (schema[f] == name) retained_idx.push_back(f);

        std::string ccsv = "feature," + run_detail::join(sig_names, ",") + "\n";
        for (size_t i = 0; i < sig_names.size(); ++i) {
            ccsv += sig_names[i];
            for (size_t j = 0; j < sig_names.size(); ++j)
                ccsv += "," + format_real(corr.matrix[i][j]);
            ccsv += "\n";
        }
        run_detail::write_text(out / "correlation.csv", ccsv);

        std::string rcsv = "feature\n";
        for (const auto& name : corr.retained) rcsv += name + "\n";
        run_detail::write_text(out / "retained.csv", rcsv);
    });
    if (reached(RunStage::screen)) return rr;

    auto features_of = [&](const FeatureRow& row) {
        std::vector<double> v(retained_idx.size());
        for (size_t j = 0; j < retained_idx.size(); ++j) v[j] = row.features[retained_idx[j]];
        return v;
    };

    // ---- grid-search cross-validation on the training split ----
    ml::Dataset train_data;
    std::map<std::string, ml::Classifier> finals;
    const std::vector<std::pair<std::string, ml::ModelFamily>> families = {
        {"logistic", ml::ModelFamily::logistic},
        {"svm", ml::ModelFamily::svm},
        {"gbt", ml::ModelFamily::gbt},
    };
    guard("model_select", [&] {
        for (size_t i : train_rows) {
            const FeatureRow& row = audited.row(i);
            train_data.X.push_back(features_of(row));
            train_data.y.push_back(row.label == Label::cancer ? 1 : 0);
            train_data.groups.push_back(row.subject_id);
        }
        const uint64_t cv_seed = stage_seed(cfg.seed, "cv");
        std::string csv = "family,params,mean_accuracy,std_accuracy,selected\n";
        for (const auto& [name, family] : families) {
            const auto grid = ml::default_grid(family, retained_idx.size());
            auto gs = ml::grid_search_cv(train_data, grid, cfg.cv_folds, cv_seed,
                                         rr.retained_features);
            for (size_t g = 0; g < gs.results.size(); ++g)
                csv += name + "," + gs.results[g].params.describe() + "," +
                       fmt4(gs.results[g].mean_accuracy) + "," +
                       fmt4(gs.results[g].std_accuracy) + "," +
                       (g == gs.best_index ? "true" : "false") + "\n";
            rr.cv_mean_accuracy[name] = gs.results[gs.best_index].mean_accuracy;
            finals.emplace(name, std::move(gs.best_model));
        }
        run_detail::write_text(out / "cv_results.csv", csv);

        rr.best_classical = families.front().first;
        for (const auto& [name, family] : families)
            if (rr.cv_mean_accuracy[name] > rr.cv_mean_accuracy[rr.best_classical])
                rr.best_classical = name;

        fs::create_directories(out / "models");
        for (const auto& [name, clf] : finals)
            ml::save_model((out / "models" / (name + ".json")).string(), clf);
    });
    if (reached(RunStage::models)) return rr;

    // ---- held-out evaluation of the classical models ----
    std::string metrics_csv =
        "model,granularity,accuracy,healthy_precision,healthy_recall,healthy_f1,"
        "cancer_precision,cancer_recall,cancer_f1,macro_precision,macro_recall,macro_f1\n";
    std::vector<run_detail::PredRec> seg_preds;
    std::vector<run_detail::SubjectPredRec> subj_preds;
    auto subject_rollup = [&](const std::string& model, const std::vector<size_t>& rows_idx,
                              const std::vector<int>& preds) {
        std::map<std::string, std::pair<int, int>> votes;  // subject -> (cancer, total)
        for (size_t k = 0; k < rows_idx.size(); ++k) {
            const auto& subject = table.rows[rows_idx[k]].subject_id;
            votes[subject].first += preds[k];
            votes[subject].second += 1;
        }
        std::vector<int> yt, yp;
        for (const auto& [subject, v] : votes) {
            run_detail::SubjectPredRec rec;
            rec.model = model;
            rec.subject = subject;
            rec.truth = rec_of.at(subject)->label == Label::cancer ? 1 : 0;
            rec.pred = run_detail::majority_vote(v.first, v.second);
            rec.votes_cancer = v.first;
            rec.votes_total = v.second;
            subj_preds.push_back(rec);
            yt.push_back(rec.truth);
            yp.push_back(rec.pred);
        }
        return ml::compute_metrics(yt, yp);
    };
    guard("evaluate", [&] {
        for (const auto& [name, family] : families) {
            const auto& clf = finals.at(name);
            std::vector<int> yt, yp;
            for (size_t i : test_rows) {
                const FeatureRow& row = audited.row(i);
                const int pred = clf.predict(features_of(row));
                yt.push_back(row.label == Label::cancer ? 1 : 0);
                yp.push_back(pred);
                seg_preds.push_back({name, row.subject_id, row.segment_idx, yt.back(), pred});
            }
            const auto seg_m = ml::compute_metrics(yt, yp);
            run_detail::append_metrics_row(metrics_csv, name, "segment", seg_m);
            rr.test_segment_accuracy[name] = seg_m.accuracy;
            const auto subj_m = subject_rollup(name, test_rows, yp);
            run_detail::append_metrics_row(metrics_csv, name, "subject", subj_m);
            rr.test_subject_accuracy[name] = subj_m.accuracy;
        }
    });

    // ---- CNN on mel-spectrogram images ----
    nn::Network<float> cnn;
    bool cnn_trained = false;
    auto image_batch = [&](const std::vector<size_t>& rows_idx, size_t lo, size_t hi) {
        nn::Tensor4<float> batch(static_cast<int>(hi - lo), SpectrogramImage::kHeight,
                                 SpectrogramImage::kWidth, SpectrogramImage::kChannels);
        const size_t stride = images[0].pixels.size();
        for (size_t k = lo; k < hi; ++k)
            std::copy(images[rows_idx[k]].pixels.begin(), images[rows_idx[k]].pixels.end(),
                      batch.data.begin() + (k - lo) * stride);
        return batch;
    };
    auto cnn_probs = [&](const std::vector<size_t>& rows_idx) {
        std::vector<double> probs;
        probs.reserve(rows_idx.size());
        const size_t step = static_cast<size_t>(cfg.nn_batch_size);
        for (size_t lo = 0; lo < rows_idx.size(); lo += step) {
            const size_t hi = std::min(rows_idx.size(), lo + step);
            auto outb = cnn.forward(image_batch(rows_idx, lo, hi), false);
            for (int i = 0; i < outb.n; ++i) probs.push_back(outb.data[i]);
        }
        return probs;
    };
    if (cfg.nn_enabled) {
        guard("cnn_train", [&] {
            std::vector<SubjectRecord> train_subjects;
            for (const auto& id : rr.split.train_ids) train_subjects.push_back(*rec_of.at(id));
            const auto val_split =
                split_corpus(train_subjects, cfg.val_fraction, cfg.seed, "valsplit");

            std::vector<size_t> fit_rows, val_rows;
            std::vector<int> fit_y, val_y;
            for (size_t i : train_rows) {
                const FeatureRow& row = audited.row(i);
                const bool heldout = val_split.in_test(row.subject_id);
                (heldout ? val_rows : fit_rows).push_back(i);
                (heldout ? val_y : fit_y).push_back(row.label == Label::cancer ? 1 : 0);
            }

            cnn = nn::make_cough_cnn<float>(stage_seed(cfg.seed, "cnn:init"));
            nn::TrainParams tp;
            tp.max_epochs = cfg.nn_max_epochs;
            tp.batch_size = cfg.nn_batch_size;
            tp.patience = cfg.nn_patience;
            tp.learning_rate = cfg.nn_learning_rate;
            tp.seed = stage_seed(cfg.seed, "cnn:train");
            const auto Xfit = image_batch(fit_rows, 0, fit_rows.size());
            const auto Xval = image_batch(val_rows, 0, val_rows.size());
            const auto hist = nn::train_network(cnn, Xfit, fit_y, Xval, val_y, tp);
            cnn_trained = true;

            fs::create_directories(out / "cnn");
            nn::HistoryCsv::write(hist, (out / "cnn" / "history.csv").string());
            nn::save_checkpoint(cnn, (out / "cnn" / "checkpoint.bin").string());

            if (cfg.nn_cv_folds > 0) {
                std::vector<int> all_y;
                std::vector<std::string> all_groups;
                for (size_t i : train_rows) {
                    const FeatureRow& row = audited.row(i);
                    all_y.push_back(row.label == Label::cancer ? 1 : 0);
                    all_groups.push_back(row.subject_id);
                }
                const auto folds = ml::stratified_group_kfold(
                    all_y, all_groups, cfg.nn_cv_folds, stage_seed(cfg.seed, "cnn:cv"));
                std::string csv = "fold,accuracy\n";
                for (int fold = 0; fold < cfg.nn_cv_folds; ++fold) {
                    std::vector<size_t> tr, va;
                    std::vector<int> try_, vay;
                    for (size_t k = 0; k < train_rows.size(); ++k) {
                        if (folds[k] == fold) {
                            va.push_back(train_rows[k]);
                            vay.push_back(all_y[k]);
                        } else {
                            tr.push_back(train_rows[k]);
                            try_.push_back(all_y[k]);
                        }
                    }
                    auto fold_net =
                        nn::make_cough_cnn<float>(stage_seed(cfg.seed, "cnn:fold" + std::to_string(fold)));
                    nn::TrainParams ftp = tp;
                    ftp.seed = stage_seed(cfg.seed, "cnn:fold-train" + std::to_string(fold));
                    nn::train_network(fold_net, image_batch(tr, 0, tr.size()), try_,
                                      image_batch(va, 0, va.size()), vay, ftp);
                    auto [loss, acc] = nn::evaluate_network(fold_net, image_batch(va, 0, va.size()),
                                                            vay, cfg.nn_batch_size);
                    csv += std::to_string(fold) + "," + fmt4(acc) + "\n";
                }
                run_detail::write_text(out / "cnn" / "cnn_cv.csv", csv);
            }
        });
        guard("cnn_evaluate", [&] {
            const auto probs = cnn_probs(test_rows);
            std::vector<int> yt, yp;
            for (size_t k = 0; k < test_rows.size(); ++k) {
                const FeatureRow& row = audited.row(test_rows[k]);
                const int pred = probs[k] >= 0.5 ? 1 : 0;
                yt.push_back(row.label == Label::cancer ? 1 : 0);
                yp.push_back(pred);
                seg_preds.push_back({"cnn", row.subject_id, row.segment_idx, yt.back(), pred});
            }
            const auto seg_m = ml::compute_metrics(yt, yp);
            run_detail::append_metrics_row(metrics_csv, "cnn", "segment", seg_m);
            rr.test_segment_accuracy["cnn"] = seg_m.accuracy;
            const auto subj_m = subject_rollup("cnn", test_rows, yp);
            run_detail::append_metrics_row(metrics_csv, "cnn", "subject", subj_m);
            rr.test_subject_accuracy["cnn"] = subj_m.accuracy;
        });
    }

    // ---- prediction and metric tables ----
    guard("reports", [&] {
        run_detail::write_text(out / "metrics.csv", metrics_csv);
        std::string pcsv = "model,subject_id,segment_idx,truth,prediction\n";
        for (const auto& p : seg_preds)
            pcsv += p.model + "," + p.subject + "," + std::to_string(p.segment_idx) + "," +
                    std::to_string(p.truth) + "," + std::to_string(p.pred) + "\n";
        run_detail::write_text(out / "predictions.csv", pcsv);
        std::string scsv = "model,subject_id,truth,prediction,votes_cancer,votes_total\n";
        for (const auto& p : subj_preds)
            scsv += p.model + "," + p.subject + "," + std::to_string(p.truth) + "," +
                    std::to_string(p.pred) + "," + std::to_string(p.votes_cancer) + "," +
                    std::to_string(p.votes_total) + "\n";
        run_detail::write_text(out / "subject_predictions.csv", scsv);
    });
    if (reached(RunStage::metrics)) return rr;

    // ---- SHAP on the best classical model ----
    guard("explain", [&] {
        const auto& clf = finals.at(rr.best_classical);
        ModelFn model = [&clf](const std::vector<double>& v) { return clf.decision(v); };

        std::vector<size_t> bg_rows = train_rows;
        auto rng = make_rng(cfg.seed, "shap:background");
        std::shuffle(bg_rows.begin(), bg_rows.end(), rng);
        bg_rows.resize(std::min<size_t>(bg_rows.size(), cfg.shap_background_rows));
        std::vector<std::vector<double>> background;
        for (size_t i : bg_rows) background.push_back(features_of(audited.row(i)));

        const int d = static_cast<int>(retained_idx.size());
        const int n_coal = std::max(cfg.shap_coalitions, 2 * d);
        std::vector<ShapExplanation> explanations;
        std::string csv = "instance_id,feature,phi,feature_value\n";
        for (size_t k = 0; k < test_rows.size() && k < static_cast<size_t>(cfg.shap_max_instances);
             ++k) {
            const FeatureRow& row = audited.row(test_rows[k]);
            const std::string instance = row.subject_id + ":" + std::to_string(row.segment_idx);
            auto e = kernel_shap(model, features_of(row), background, n_coal,
                                 stage_seed(cfg.seed, "shap:" + instance));
            for (size_t j = 0; j < rr.retained_features.size(); ++j)
                csv += instance + "," + rr.retained_features[j] + "," + format_real(e.phi[j]) +
                       "," + format_real(e.x[j]) + "\n";
            explanations.push_back(std::move(e));
        }
        run_detail::write_text(out / "shap.csv", csv);

        std::string sumcsv = "feature,mean_abs_phi\n";
        for (const auto& rowr : shap_summary(explanations))
            sumcsv += rr.retained_features[static_cast<size_t>(rowr.feature)] + "," +
                      format_real(rowr.mean_abs_phi) + "\n";
        run_detail::write_text(out / "shap_summary.csv", sumcsv);
    });
    if (reached(RunStage::explain)) return rr;

    // ---- fairness audit over per-subject majority votes ----
    // The audit uses every subject: a 10% test slice of a small corpus cannot
    // guarantee each demographic cell holds both classes.
    guard("fairness", [&] {
        std::vector<size_t> all_rows(table.rows.size());
        std::iota(all_rows.begin(), all_rows.end(), 0);

        auto subject_votes = [&](const std::vector<int>& preds) {
            std::map<std::string, std::pair<int, int>> votes;
            for (size_t i = 0; i < preds.size(); ++i) {
                auto& v = votes[audited.row(i).subject_id];
                v.first += preds[i];
                v.second += 1;
            }
            return votes;
        };
        auto audit_model = [&](const std::vector<int>& preds, const std::string& csv_name) {
            const auto votes = subject_votes(preds);
            std::vector<SubjectRecord> subs;
            std::vector<int> yt, yp;
            for (const auto& r : records) {
                auto it = votes.find(r.subject_id);
                if (it == votes.end()) continue;
                subs.push_back(r);
                yt.push_back(r.label == Label::cancer ? 1 : 0);
                yp.push_back(run_detail::majority_vote(it->second.first, it->second.second));
            }
            const auto age_rep = equalized_odds_difference_mean(
                yt, yp, stratify_age(subs, cfg.age_threshold), "age");
            const auto sex_rep =
                equalized_odds_difference_mean(yt, yp, stratify_sex(subs), "sex");
            write_fairness_csv({age_rep, sex_rep}, (out / csv_name).string());
            return std::vector<FairnessReport>{age_rep, sex_rep};
        };

        std::vector<int> classical_preds;
        const auto& clf = finals.at(rr.best_classical);
        for (size_t i : all_rows) classical_preds.push_back(clf.predict(features_of(audited.row(i))));
        auto reports = audit_model(classical_preds, "fairness_classical.csv");

        if (cnn_trained) {
            std::vector<int> cnn_preds;
            for (double p : cnn_probs(all_rows)) cnn_preds.push_back(p >= 0.5 ? 1 : 0);
            auto cnn_reports = audit_model(cnn_preds, "fairness_cnn.csv");
            reports.insert(reports.end(), cnn_reports.begin(), cnn_reports.end());
        }

        std::string support = "attribute,group,positives,negatives\n";
        for (const auto& rep : reports)
            for (const auto& g : rep.groups)
                support += rep.attribute + "," + g.group + "," + std::to_string(g.positives) +
                           "," + std::to_string(g.negatives) + "\n";
        run_detail::write_text(out / "fairness_support.csv", support);
    });
    if (reached(RunStage::fairness)) return rr;

    // ---- run manifest ----
    guard("manifest", [&] {
        nlohmann::json j;
        j["format"] = "coughlab-run";
        j["version"] = "0.1.0";
        j["seed"] = cfg.seed;
        char hash[24];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(cfg.config_hash()));
        j["config_hash"] = hash;
        std::time_t now = std::time(nullptr);
        char ts[32];
        std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["timestamp_utc"] = ts;  // the only nondeterministic byte in a run
        j["subjects"] = records.size();
        j["train_subjects"] = rr.split.train_ids.size();
        j["test_subjects"] = rr.split.test_ids.size();
        j["train_segments"] = rr.train_segments;
        j["test_segments"] = rr.test_segments;
        j["retained_features"] = rr.retained_features;
        j["best_classical"] = rr.best_classical;
        j["cv_mean_accuracy"] = rr.cv_mean_accuracy;
        j["test_segment_accuracy"] = rr.test_segment_accuracy;
        j["test_subject_accuracy"] = rr.test_subject_accuracy;
        run_detail::write_text(out / "manifest.json", j.dump(2) + "\n");
    });

    guard("figures", [&] { emit_figures(cfg.out_dir); });
    log.enter("done");
    return rr;
}

}  // namespace coughlab
