// Group-fairness audit: per-group TPR/FPR and the mean equalized odds
// difference across a two-valued attribute.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"

namespace coughlab {

struct GroupRates {
    std::string group;
    double tpr = 0.0;
    double fpr = 0.0;
    int positives = 0;
    int negatives = 0;
};

struct FairnessReport {
    std::string attribute;
    std::vector<GroupRates> groups;  // exactly two
    double eod_mean = 0.0;
};

// eod_mean = (|TPR_A - TPR_B| + |FPR_A - FPR_B|) / 2. Requires exactly two
// groups, each with at least one positive and one negative instance.
inline FairnessReport equalized_odds_difference_mean(const std::vector<int>& y_true,
                                                     const std::vector<int>& y_pred,
                                                     const std::vector<std::string>& group_of,
                                                     const std::string& attribute = "") {
    if (y_true.empty() || y_true.size() != y_pred.size() || y_true.size() != group_of.size())
        throw InvalidArgument("equalized_odds: size mismatch or empty input");
    for (size_t i = 0; i < y_true.size(); ++i)
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw InvalidArgument("equalized_odds: labels must be 0 or 1");

    std::vector<std::string> names;
    for (const auto& g : group_of)
        if (std::find(names.begin(), names.end(), g) == names.end()) names.push_back(g);
    if (names.size() != 2)
        throw InvalidArgument("equalized_odds: expected exactly two groups, got " +
                              std::to_string(names.size()));

    FairnessReport report;
    report.attribute = attribute;
    for (const auto& name : names) {
        GroupRates r;
        r.group = name;
        int tp = 0, fp = 0;
        for (size_t i = 0; i < y_true.size(); ++i) {
            if (group_of[i] != name) continue;
            if (y_true[i] == 1) {
                ++r.positives;
                if (y_pred[i] == 1) ++tp;
            } else {
                ++r.negatives;
                if (y_pred[i] == 1) ++fp;
            }
        }
        if (r.positives == 0 || r.negatives == 0)
            throw DegenerateInput("equalized_odds: group \"" + name +
                                  "\" lacks a positive or negative instance");
        r.tpr = static_cast<double>(tp) / r.positives;
        r.fpr = static_cast<double>(fp) / r.negatives;
        report.groups.push_back(r);
    }
    report.eod_mean = (std::abs(report.groups[0].tpr - report.groups[1].tpr) +
                       std::abs(report.groups[0].fpr - report.groups[1].fpr)) /
                      2.0;
    return report;
}

// Age groups split at the threshold; the threshold age itself belongs to the
// older group. The default of 58 is the healthy cohort's third quartile.
inline std::vector<std::string> stratify_age(const std::vector<SubjectRecord>& records,
                                             int threshold_years = 58) {
    std::vector<std::string> out;
    out.reserve(records.size());
    const std::string younger = "<" + std::to_string(threshold_years);
    const std::string older = ">=" + std::to_string(threshold_years);
    for (const auto& r : records) {
        if (r.age_years <= 0)
            throw InvalidArgument("stratify_age: missing age for subject " + r.subject_id);
        out.push_back(r.age_years >= threshold_years ? older : younger);
    }
    return out;
}

inline std::vector<std::string> stratify_sex(const std::vector<SubjectRecord>& records) {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.emplace_back(to_string(r.sex));
    return out;
}

// Values are rounded to 2 decimals here and nowhere else.
inline void write_fairness_csv(const std::vector<FairnessReport>& reports,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open fairness report for writing: " + path);
    out << "attribute,group,tpr,fpr,eod_mean\n";
    char buf[256];
    for (const auto& rep : reports)
        for (const auto& g : rep.groups) {
            std::snprintf(buf, sizeof(buf), "%s,%s,%.2f,%.2f,%.2f\n", rep.attribute.c_str(),
                          g.group.c_str(), round_to(g.tpr, 2), round_to(g.fpr, 2),
                          round_to(rep.eod_mean, 2));
            out << buf;
        }
    if (!out) throw IoError("failed writing fairness report: " + path);
}

}  // namespace coughlab
