// SVG report figures: per-feature boxplots with significance stars and a
// SHAP beeswarm. Pure string generation, no display dependency.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/feature_vector.hpp"

namespace coughlab {

struct BoxStats {
    double q1 = 0.0, median = 0.0, q3 = 0.0;
    double lo_whisker = 0.0, hi_whisker = 0.0;  // extreme data within 1.5 IQR
};

inline BoxStats box_stats(const std::vector<double>& xs) {
    if (xs.empty()) throw InvalidArgument("box_stats: empty sample");
    BoxStats b;
    b.q1 = quantile(xs, 0.25);
    b.median = quantile(xs, 0.5);
    b.q3 = quantile(xs, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr, hi_fence = b.q3 + 1.5 * iqr;
    b.lo_whisker = b.q3;
    b.hi_whisker = b.q1;
    bool any = false;
    for (double v : xs) {
        if (v < lo_fence || v > hi_fence) continue;
        if (!any) {
            b.lo_whisker = b.hi_whisker = v;
            any = true;
        } else {
            b.lo_whisker = std::min(b.lo_whisker, v);
            b.hi_whisker = std::max(b.hi_whisker, v);
        }
    }
    return b;
}

inline int significance_stars(double p) {
    if (p < 0.001) return 3;
    if (p < 0.01) return 2;
    if (p < 0.05) return 1;
    return 0;
}

namespace figure_detail {

// maps a data value into panel pixels, top edge = hi end of the value range
inline double value_to_y(double v, double lo, double hi, double top, double height) {
    if (hi <= lo) return top + height / 2.0;
    return top + (hi - v) / (hi - lo) * height;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline void draw_box(std::ostringstream& svg, const BoxStats& b, double cx, double lo, double hi,
                     double top, double height, const char* fill) {
    const double w = 26.0;
    const double yq1 = value_to_y(b.q1, lo, hi, top, height);
    const double yq3 = value_to_y(b.q3, lo, hi, top, height);
    const double ymed = value_to_y(b.median, lo, hi, top, height);
    const double ylo = value_to_y(b.lo_whisker, lo, hi, top, height);
    const double yhi = value_to_y(b.hi_whisker, lo, hi, top, height);
    svg << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(ylo) << "\" x2=\"" << fmt(cx)
        << "\" y2=\"" << fmt(yhi) << "\" stroke=\"#444\"/>\n";
    svg << "<rect x=\"" << fmt(cx - w / 2) << "\" y=\"" << fmt(yq3) << "\" width=\"" << fmt(w)
        << "\" height=\"" << fmt(yq1 - yq3) << "\" fill=\"" << fill
        << "\" stroke=\"#333\" fill-opacity=\"0.7\"/>\n";
    svg << "<line x1=\"" << fmt(cx - w / 2) << "\" y1=\"" << fmt(ymed) << "\" x2=\""
        << fmt(cx + w / 2) << "\" y2=\"" << fmt(ymed) << "\" stroke=\"#000\"/>\n";
}

}  // namespace figure_detail

// One panel per feature: healthy and cancer boxes side by side, star
// annotation per the feature's p-value.
inline std::string boxplot_grid_svg(const std::vector<std::string>& names,
                                    const std::vector<std::vector<double>>& healthy,
                                    const std::vector<std::vector<double>>& cancer,
                                    const std::vector<double>& p_values) {
    const size_t n = names.size();
    if (healthy.size() != n || cancer.size() != n || p_values.size() != n)
        throw InvalidArgument("boxplot_grid_svg: inconsistent inputs");
    const int cols = 5;
    const int rows = static_cast<int>((n + cols - 1) / cols);
    const double pw = 170.0, ph = 150.0;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * pw << "\" height=\""
        << rows * ph << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (size_t f = 0; f < n; ++f) {
        const double px = static_cast<double>(f % cols) * pw;
        const double py = static_cast<double>(f / cols) * ph;
        const double top = py + 26.0, height = ph - 50.0;
        double lo = healthy[f].empty() ? 0.0 : healthy[f][0];
        double hi = lo;
        for (const auto* vals : {&healthy[f], &cancer[f]})
            for (double v : *vals) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        if (hi <= lo) hi = lo + 1.0;
        const auto bh = box_stats(healthy[f]);
        const auto bc = box_stats(cancer[f]);
        svg << "<text x=\"" << figure_detail::fmt(px + pw / 2) << "\" y=\""
            << figure_detail::fmt(py + 14.0)
            << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">" << names[f]
            << "</text>\n";
        figure_detail::draw_box(svg, bh, px + pw * 0.33, lo, hi, top, height, "#4c72b0");
        figure_detail::draw_box(svg, bc, px + pw * 0.66, lo, hi, top, height, "#c44e52");
        const int stars = significance_stars(p_values[f]);
        if (stars > 0)
            svg << "<text x=\"" << figure_detail::fmt(px + pw / 2) << "\" y=\""
                << figure_detail::fmt(py + ph - 8.0)
                << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">"
                << std::string(static_cast<size_t>(stars), '*') << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// Beeswarm: one row per feature ordered by mean |phi| descending, points at
// x ~ phi, fill shaded by the normalized feature value.
inline std::string beeswarm_svg(const std::vector<std::string>& names,
                                const std::vector<std::vector<double>>& phis,
                                const std::vector<std::vector<double>>& values) {
    const size_t n = names.size();
    if (phis.size() != n || values.size() != n)
        throw InvalidArgument("beeswarm_svg: inconsistent inputs");
    const double row_h = 26.0, left = 170.0, width = 420.0;
    const double h = 40.0 + row_h * static_cast<double>(n);
    double max_abs = 1e-12;
    for (const auto& row : phis)
        for (double v : row) max_abs = std::max(max_abs, std::abs(v));

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + width + 40.0
        << "\" height=\"" << h << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double x0 = left + width / 2.0;
    svg << "<line x1=\"" << figure_detail::fmt(x0) << "\" y1=\"20\" x2=\""
        << figure_detail::fmt(x0) << "\" y2=\"" << figure_detail::fmt(h - 20.0)
        << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    for (size_t f = 0; f < n; ++f) {
        const double cy = 34.0 + row_h * static_cast<double>(f);
        svg << "<text x=\"" << figure_detail::fmt(left - 8.0) << "\" y=\""
            << figure_detail::fmt(cy + 4.0)
            << "\" font-size=\"10\" text-anchor=\"end\" font-family=\"sans-serif\">" << names[f]
            << "</text>\n";
        double vlo = 0.0, vhi = 1.0;
        if (!values[f].empty()) {
            vlo = *std::min_element(values[f].begin(), values[f].end());
            vhi = *std::max_element(values[f].begin(), values[f].end());
        }
        for (size_t i = 0; i < phis[f].size(); ++i) {
            const double x = x0 + phis[f][i] / max_abs * (width / 2.0 - 10.0);
            // deterministic vertical jitter so coincident points stay visible
            const double jit = static_cast<double>((i * 2654435761u) % 9) - 4.0;
            const double t = vhi > vlo ? (values[f][i] - vlo) / (vhi - vlo) : 0.5;
            const int r = static_cast<int>(60 + 180 * t);
            const int b = static_cast<int>(200 - 140 * t);
            svg << "<circle cx=\"" << figure_detail::fmt(x) << "\" cy=\""
                << figure_detail::fmt(cy + jit) << "\" r=\"3\" fill=\"rgb(" << r << ",80," << b
                << ")\" fill-opacity=\"0.8\"/>\n";
        }
    }
    svg << "<text x=\"" << figure_detail::fmt(x0) << "\" y=\"" << figure_detail::fmt(h - 6.0)
        << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">phi</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

// Reads the tables a completed run wrote and emits figures/ under the run
// directory. Returns the paths written.
inline std::vector<std::string> emit_figures(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path root(run_dir);
    const char* needed[] = {"features.csv", "split.csv", "stats.csv", "shap.csv",
                            "shap_summary.csv"};
    std::string missing;
    for (const char* name : needed)
        if (!fs::exists(root / name)) missing += missing.empty() ? name : std::string(", ") + name;
    if (!missing.empty())
        throw IoError("emit_figures: missing tables in " + run_dir + ": " + missing);

    const auto table = read_feature_table((root / "features.csv").string());

    std::map<std::string, std::string> split_of;
    for (const auto& row : read_csv((root / "split.csv").string())) {
        if (row.size() >= 3 && row[0] != "subject_id") split_of[row[0]] = row[2];
    }

    std::map<std::string, double> p_of;
    for (const auto& row : read_csv((root / "stats.csv").string())) {
        if (row.size() >= 3 && row[0] != "feature") p_of[row[0]] = std::stod(row[2]);
    }

    const auto& schema = feature_names();
    std::vector<std::string> names(schema.begin(), schema.end());
    std::vector<std::vector<double>> healthy(names.size()), cancer(names.size());
    for (const auto& row : table.rows) {
        auto it = split_of.find(row.subject_id);
        if (it == split_of.end() || it->second != "train") continue;
        auto& dst = row.label == Label::cancer ? cancer : healthy;
        for (size_t f = 0; f < names.size(); ++f) dst[f].push_back(row.features[f]);
    }
    std::vector<double> pvals(names.size(), 1.0);
    for (size_t f = 0; f < names.size(); ++f) {
        auto it = p_of.find(names[f]);
        if (it != p_of.end()) pvals[f] = it->second;
    }

    // beeswarm rows in summary order
    std::vector<std::string> shap_names;
    for (const auto& row : read_csv((root / "shap_summary.csv").string()))
        if (row.size() >= 2 && row[0] != "feature") shap_names.push_back(row[0]);
    std::map<std::string, size_t> shap_rank;
    for (size_t i = 0; i < shap_names.size(); ++i) shap_rank[shap_names[i]] = i;
    std::vector<std::vector<double>> phis(shap_names.size()), values(shap_names.size());
    for (const auto& row : read_csv((root / "shap.csv").string())) {
        if (row.size() < 4 || row[0] == "instance_id") continue;
        auto it = shap_rank.find(row[1]);
        if (it == shap_rank.end()) continue;
        phis[it->second].push_back(std::stod(row[2]));
        values[it->second].push_back(std::stod(row[3]));
    }

    fs::create_directories(root / "figures");
    std::vector<std::string> written;
    {
        const auto path = (root / "figures" / "boxplots.svg").string();
        std::ofstream out(path);
        out << boxplot_grid_svg(names, healthy, cancer, pvals);
        if (!out) throw IoError("failed writing " + path);
        written.push_back(path);
    }
    {
        const auto path = (root / "figures" / "shap_beeswarm.svg").string();
        std::ofstream out(path);
        out << beeswarm_svg(shap_names, phis, values);
        if (!out) throw IoError("failed writing " + path);
        written.push_back(path);
    }
    return written;
}

}  // namespace coughlab
