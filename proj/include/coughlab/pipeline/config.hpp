// Flat "key = value" configuration with dotted sections, plus the resolved
// pipeline configuration and its content hash.
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/feature_vector.hpp"
#include "coughlab/nn/network.hpp"
#include "coughlab/preprocess.hpp"
#include "coughlab/segment.hpp"
#include "coughlab/spectrogram.hpp"

namespace coughlab {

// Ordered key/value pairs. Lines are `key = value`; blank lines and lines
// starting with '#' are ignored.
struct KvConfig {
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return &v;
        return nullptr;
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries)
            if (k == key) {
                v = value;
                return;
            }
        entries.emplace_back(key, value);
    }

    static KvConfig parse(std::istream& in, const std::string& origin) {
        KvConfig cfg;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            const size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw FormatError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + t + "'");
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw FormatError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (cfg.find(key) != nullptr)
                throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
            cfg.entries.emplace_back(key, value);
        }
        return cfg;
    }

    static KvConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config: " + path);
        return parse(in, path);
    }

    static KvConfig parse_text(const std::string& text) {
        std::istringstream in(text);
        return parse(in, "<config>");
    }
};

struct PipelineConfig {
    std::string manifest_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool seed_set = false;

    PreprocessParams preprocess;
    SegmenterParams segmenter;
    FeatureParams features;
    MelSpectrogramParams mel;
    bool save_rasters = false;

    double test_fraction = 0.10;
    double val_fraction = 0.30;
    double alpha = 0.05;
    double prune_threshold = 0.8;
    int cv_folds = 5;

    bool nn_enabled = true;
    int nn_max_epochs = 200;
    int nn_batch_size = 16;
    int nn_patience = 15;
    double nn_learning_rate = 0.001;
    int nn_cv_folds = 0;

    int shap_coalitions = 2048;
    int shap_background_rows = 100;
    int shap_max_instances = 50;
    int age_threshold = 58;

    static PipelineConfig from_kv(const KvConfig& kv);
    static PipelineConfig from_file(const std::string& path) {
        return from_kv(KvConfig::parse_file(path));
    }

    void validate() const {
        auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!in_unit(test_fraction)) throw InvalidArgument("config: split.test_fraction outside (0,1)");
        if (!in_unit(val_fraction)) throw InvalidArgument("config: split.val_fraction outside (0,1)");
        if (!in_unit(alpha)) throw InvalidArgument("config: stats.alpha outside (0,1)");
        if (prune_threshold <= 0.0 || prune_threshold > 1.0)
            throw InvalidArgument("config: stats.prune_threshold outside (0,1]");
        if (cv_folds < 2) throw InvalidArgument("config: cv.folds must be at least 2");
        if (nn_max_epochs < 1 || nn_batch_size < 1 || nn_patience < 1)
            throw InvalidArgument("config: nn.* counts must be positive");
        if (nn_learning_rate <= 0.0) throw InvalidArgument("config: nn.learning_rate must be positive");
        if (nn_cv_folds < 0) throw InvalidArgument("config: nn.cv_folds must be non-negative");
        if (shap_coalitions < 2 || shap_background_rows < 1 || shap_max_instances < 1)
            throw InvalidArgument("config: shap.* counts must be positive");
        if (age_threshold < 1) throw InvalidArgument("config: fairness.age_threshold must be positive");
        if (!seed_set) throw InvalidArgument("config: run.seed missing (set it or pass --seed)");
    }

    // Canonical analytic parameters; excludes filesystem locations so runs on
    // relocated corpora hash identically.
    std::string canonical() const {
        std::ostringstream out;
        out << "run.seed = " << seed << "\n";
        out << "preprocess.target_rate_hz = " << preprocess.target_rate_hz << "\n";
        out << "preprocess.lowpass_cutoff_hz = " << format_real(preprocess.lowpass_cutoff_hz) << "\n";
        out << "preprocess.lowpass_order = " << preprocess.lowpass_order << "\n";
        out << "preprocess.target_peak = " << format_real(preprocess.target_peak) << "\n";
        out << "segment.frame_ms = " << format_real(segmenter.frame_ms) << "\n";
        out << "segment.onset_k = " << format_real(segmenter.onset_k) << "\n";
        out << "segment.offset_k = " << format_real(segmenter.offset_k) << "\n";
        out << "segment.min_cough_ms = " << format_real(segmenter.min_cough_ms) << "\n";
        out << "segment.merge_gap_ms = " << format_real(segmenter.merge_gap_ms) << "\n";
        out << "segment.pad_ms = " << format_real(segmenter.pad_ms) << "\n";
        out << "features.rolloff_pct = " << format_real(features.rolloff_pct) << "\n";
        out << "features.welch_frame = " << features.welch.frame_length << "\n";
        out << "mfcc.frame_length = " << features.mfcc.frame_length << "\n";
        out << "mfcc.hop = " << features.mfcc.hop << "\n";
        out << "mel.frame_length = " << mel.frame_length << "\n";
        out << "mel.hop = " << mel.hop << "\n";
        out << "mel.n_mels = " << mel.n_mels << "\n";
        out << "mel.db_floor = " << format_real(mel.db_floor) << "\n";
        out << "split.test_fraction = " << format_real(test_fraction) << "\n";
        out << "split.val_fraction = " << format_real(val_fraction) << "\n";
        out << "stats.alpha = " << format_real(alpha) << "\n";
        out << "stats.prune_threshold = " << format_real(prune_threshold) << "\n";
        out << "cv.folds = " << cv_folds << "\n";
        out << "nn.enabled = " << (nn_enabled ? "true" : "false") << "\n";
        out << "nn.max_epochs = " << nn_max_epochs << "\n";
        out << "nn.batch_size = " << nn_batch_size << "\n";
        out << "nn.patience = " << nn_patience << "\n";
        out << "nn.learning_rate = " << format_real(nn_learning_rate) << "\n";
        out << "nn.cv_folds = " << nn_cv_folds << "\n";
        out << "shap.n_coalitions = " << shap_coalitions << "\n";
        out << "shap.background_rows = " << shap_background_rows << "\n";
        out << "shap.max_instances = " << shap_max_instances << "\n";
        out << "fairness.age_threshold = " << age_threshold << "\n";
        return out.str();
    }

    uint64_t config_hash() const { return fnv1a64(canonical()); }
};

namespace config_detail {

inline double as_real(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw FormatError("config: key '" + key + "' has non-numeric value '" + value + "'");
    }
}

inline long as_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        const long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw FormatError("config: key '" + key + "' has non-integer value '" + value + "'");
    }
}

inline bool as_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw FormatError("config: key '" + key + "' must be true or false, got '" + value + "'");
}

}  // namespace config_detail

inline PipelineConfig PipelineConfig::from_kv(const KvConfig& kv) {
    using config_detail::as_bool;
    using config_detail::as_int;
    using config_detail::as_real;
    PipelineConfig cfg;
    for (const auto& [key, value] : kv.entries) {
        if (key == "corpus.manifest") cfg.manifest_path = value;
        else if (key == "run.out_dir") cfg.out_dir = value;
        else if (key == "run.seed") {
            cfg.seed = static_cast<uint64_t>(as_int(key, value));
            cfg.seed_set = true;
        } else if (key == "preprocess.target_rate_hz")
            cfg.preprocess.target_rate_hz = static_cast<int>(as_int(key, value));
        else if (key == "preprocess.lowpass_cutoff_hz")
            cfg.preprocess.lowpass_cutoff_hz = as_real(key, value);
        else if (key == "preprocess.lowpass_order")
            cfg.preprocess.lowpass_order = static_cast<int>(as_int(key, value));
        else if (key == "preprocess.target_peak") cfg.preprocess.target_peak = as_real(key, value);
        else if (key == "segment.frame_ms") cfg.segmenter.frame_ms = as_real(key, value);
        else if (key == "segment.onset_k") cfg.segmenter.onset_k = as_real(key, value);
        else if (key == "segment.offset_k") cfg.segmenter.offset_k = as_real(key, value);
        else if (key == "segment.min_cough_ms") cfg.segmenter.min_cough_ms = as_real(key, value);
        else if (key == "segment.merge_gap_ms") cfg.segmenter.merge_gap_ms = as_real(key, value);
        else if (key == "segment.pad_ms") cfg.segmenter.pad_ms = as_real(key, value);
        else if (key == "features.rolloff_pct") cfg.features.rolloff_pct = as_real(key, value);
        else if (key == "features.welch_frame")
            cfg.features.welch.frame_length = static_cast<size_t>(as_int(key, value));
        else if (key == "mfcc.frame_length")
            cfg.features.mfcc.frame_length = static_cast<size_t>(as_int(key, value));
        else if (key == "mfcc.hop") cfg.features.mfcc.hop = static_cast<size_t>(as_int(key, value));
        else if (key == "mel.frame_length")
            cfg.mel.frame_length = static_cast<size_t>(as_int(key, value));
        else if (key == "mel.hop") cfg.mel.hop = static_cast<size_t>(as_int(key, value));
        else if (key == "mel.n_mels") cfg.mel.n_mels = static_cast<size_t>(as_int(key, value));
        else if (key == "mel.db_floor") cfg.mel.db_floor = as_real(key, value);
        else if (key == "mel.save_rasters") cfg.save_rasters = as_bool(key, value);
        else if (key == "split.test_fraction") cfg.test_fraction = as_real(key, value);
        else if (key == "split.val_fraction") cfg.val_fraction = as_real(key, value);
        else if (key == "stats.alpha") cfg.alpha = as_real(key, value);
        else if (key == "stats.prune_threshold") cfg.prune_threshold = as_real(key, value);
        else if (key == "cv.folds") cfg.cv_folds = static_cast<int>(as_int(key, value));
        else if (key == "nn.enabled") cfg.nn_enabled = as_bool(key, value);
        else if (key == "nn.max_epochs") cfg.nn_max_epochs = static_cast<int>(as_int(key, value));
        else if (key == "nn.batch_size") cfg.nn_batch_size = static_cast<int>(as_int(key, value));
        else if (key == "nn.patience") cfg.nn_patience = static_cast<int>(as_int(key, value));
        else if (key == "nn.learning_rate") cfg.nn_learning_rate = as_real(key, value);
        else if (key == "nn.cv_folds") cfg.nn_cv_folds = static_cast<int>(as_int(key, value));
        else if (key == "shap.n_coalitions")
            cfg.shap_coalitions = static_cast<int>(as_int(key, value));
        else if (key == "shap.background_rows")
            cfg.shap_background_rows = static_cast<int>(as_int(key, value));
        else if (key == "shap.max_instances")
            cfg.shap_max_instances = static_cast<int>(as_int(key, value));
        else if (key == "fairness.age_threshold")
            cfg.age_threshold = static_cast<int>(as_int(key, value));
        else
            throw FormatError("config: unknown key '" + key + "'");
    }
    return cfg;
}

}  // namespace coughlab
