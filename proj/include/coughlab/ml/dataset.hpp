// Tabular dataset view shared by the classical models: rows, binary labels,
// and the subject grouping key that all splits must respect.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/feature_vector.hpp"

namespace coughlab::ml {

struct Dataset {
    std::vector<std::vector<double>> X;
    std::vector<int> y;                // 0 = healthy, 1 = cancer
    std::vector<std::string> groups;   // subject_id per row

    size_t size() const { return X.size(); }
    size_t dim() const { return X.empty() ? 0 : X[0].size(); }
};

inline void validate_dataset(const Dataset& d) {
    if (d.X.empty()) throw InvalidArgument("dataset: empty");
    if (d.y.size() != d.X.size() || d.groups.size() != d.X.size())
        throw InvalidArgument("dataset: column lengths disagree");
    const size_t dim = d.X[0].size();
    for (const auto& row : d.X) {
        if (row.size() != dim) throw InvalidArgument("dataset: ragged rows");
        for (double v : row)
            if (!std::isfinite(v)) throw InvalidArgument("dataset: non-finite value");
    }
    for (int label : d.y)
        if (label != 0 && label != 1) throw InvalidArgument("dataset: labels must be 0 or 1");
}

// Select named feature columns from a table (identity when `keep` lists the
// full schema). Order follows `keep`.
inline Dataset from_feature_table(const FeatureTable& table, const std::vector<std::string>& keep) {
    std::vector<size_t> cols;
    for (const auto& name : keep) {
        bool found = false;
        for (size_t j = 0; j < kNumFeatures; ++j)
            if (feature_names()[j] == name) {
                cols.push_back(j);
                found = true;
                break;
            }
        if (!found) throw InvalidArgument("from_feature_table: unknown feature '" + name + "'");
    }
    Dataset d;
    for (const auto& row : table.rows) {
        std::vector<double> x(cols.size());
        for (size_t j = 0; j < cols.size(); ++j) x[j] = row.features[cols[j]];
        d.X.push_back(std::move(x));
        d.y.push_back(row.label == Label::cancer ? 1 : 0);
        d.groups.push_back(row.subject_id);
    }
    validate_dataset(d);
    return d;
}

inline Dataset from_feature_table(const FeatureTable& table) {
    return from_feature_table(table,
                              std::vector<std::string>(feature_names().begin(), feature_names().end()));
}

}  // namespace coughlab::ml
