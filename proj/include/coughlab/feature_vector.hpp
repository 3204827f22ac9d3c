// The 39-feature acoustic descriptor: schema, assembly and table I/O.
#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/mfcc.hpp"
#include "coughlab/spectrum.hpp"

namespace coughlab {

inline constexpr size_t kNumFeatures = 39;

// Fixed schema order; serialized tables are validated against it.
inline const std::array<std::string, kNumFeatures>& feature_names() {
    static const std::array<std::string, kNumFeatures> names = [] {
        std::array<std::string, kNumFeatures> n;
        size_t i = 0;
        n[i++] = "zcr";
        n[i++] = "rms_power";
        n[i++] = "dominant_frequency_hz";
        n[i++] = "spectral_centroid_hz";
        n[i++] = "spectral_rolloff_hz";
        n[i++] = "spectral_spread_hz";
        n[i++] = "spectral_skewness";
        n[i++] = "spectral_kurtosis";
        n[i++] = "spectral_bandwidth_hz";
        n[i++] = "spectral_flatness";
        n[i++] = "spectral_slope";
        n[i++] = "spectral_decrease";
        n[i++] = "crest_factor";
        for (int k = 0; k < 17; ++k) n[i++] = "mfcc_mean_" + std::to_string(k);
        n[i++] = "cough_length_s";
        for (int k = 0; k < 8; ++k) n[i++] = "psd_band_" + std::to_string(k);
        return n;
    }();
    return names;
}

struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double operator[](size_t i) const { return values[i]; }
    double& operator[](size_t i) { return values[i]; }
};

struct TimeDomainFeatures {
    double zcr = 0.0;
    double rms_power = 0.0;
    double crest_factor = 0.0;
    double cough_length_s = 0.0;
};

// zcr counts strict sign flips between adjacent samples; crest is peak/RMS.
inline TimeDomainFeatures time_domain_features(const CoughSegment& seg) {
    const auto& x = seg.samples;
    if (x.empty()) throw InvalidArgument("time_domain_features: empty segment");
    double peak = 0.0, sumsq = 0.0;
    size_t crossings = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        peak = std::max(peak, std::abs(x[i]));
        sumsq += x[i] * x[i];
        if (i > 0 && x[i - 1] * x[i] < 0.0) ++crossings;
    }
    if (peak == 0.0) throw DegenerateInput("time_domain_features: all-zero segment");

    TimeDomainFeatures f;
    f.zcr = x.size() > 1 ? static_cast<double>(crossings) / static_cast<double>(x.size() - 1) : 0.0;
    f.rms_power = std::sqrt(sumsq / static_cast<double>(x.size()));
    f.crest_factor = peak / f.rms_power;
    f.cough_length_s = static_cast<double>(x.size()) / seg.sample_rate_hz;
    return f;
}

struct FeatureParams {
    WelchParams welch;
    MfccParams mfcc;
    double rolloff_pct = 0.85;
};

inline FeatureVector feature_vector(const CoughSegment& seg, const FeatureParams& p = {}) {
    const auto td = time_domain_features(seg);
    const auto ps = power_spectrum(seg, p.welch);
    const auto sf = spectral_features(ps, p.rolloff_pct);
    const auto mfcc = mfcc_means(seg, p.mfcc);
    const auto psd = psd_band_powers(ps);

    FeatureVector v;
    size_t i = 0;
    v[i++] = td.zcr;
    v[i++] = td.rms_power;
    v[i++] = sf.dominant_frequency_hz;
    v[i++] = sf.centroid_hz;
    v[i++] = sf.rolloff_hz;
    v[i++] = sf.spread_hz;
    v[i++] = sf.skewness;
    v[i++] = sf.kurtosis;
    v[i++] = sf.bandwidth_hz;
    v[i++] = sf.flatness;
    v[i++] = sf.slope;
    v[i++] = sf.decrease;
    v[i++] = td.crest_factor;
    for (double c : mfcc) v[i++] = c;
    v[i++] = td.cough_length_s;
    for (double b : psd) v[i++] = b;

    for (double x : v.values)
        if (!std::isfinite(x)) throw DegenerateInput("feature_vector: non-finite feature");
    return v;
}

// One row per segment: subject, running segment index, label, 39 features.
struct FeatureRow {
    std::string subject_id;
    int segment_idx = 0;
    Label label = Label::healthy;
    FeatureVector features;
};

struct FeatureTable {
    std::vector<FeatureRow> rows;
};

inline void write_feature_table(const std::string& path, const FeatureTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path);
    out << "subject_id,segment_idx,label";
    for (const auto& name : feature_names()) out << "," << name;
    out << "\n";
    for (const auto& row : table.rows) {
        out << row.subject_id << "," << row.segment_idx << "," << to_string(row.label);
        for (double v : row.features.values) out << "," << format_real(v);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline FeatureTable read_feature_table(const std::string& path) {
    auto rows = read_csv(path);
    if (rows.empty()) throw FormatError(path + ": empty feature table");
    const auto& header = rows[0];
    if (header.size() != 3 + kNumFeatures) throw FormatError(path + ": wrong column count");
    for (size_t i = 0; i < kNumFeatures; ++i)
        if (header[3 + i] != feature_names()[i])
            throw FormatError(path + ": feature column " + std::to_string(i) + " is '" + header[3 + i] +
                              "', expected '" + feature_names()[i] + "'");
    FeatureTable table;
    for (size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != 3 + kNumFeatures)
            throw FormatError(path + ": row " + std::to_string(r + 1) + " has wrong column count");
        FeatureRow row;
        row.subject_id = cells[0];
        row.segment_idx = std::stoi(cells[1]);
        if (cells[2] == "healthy")
            row.label = Label::healthy;
        else if (cells[2] == "cancer")
            row.label = Label::cancer;
        else
            throw FormatError(path + ": unknown label '" + cells[2] + "'");
        for (size_t i = 0; i < kNumFeatures; ++i) row.features[i] = std::stod(cells[3 + i]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace coughlab
