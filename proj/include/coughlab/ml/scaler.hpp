// Per-feature standardization fitted on training data only.
#pragma once

#include <cmath>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::ml {

struct StandardScaler {
    std::vector<double> means;
    std::vector<double> stds;  // floored at 1e-12 so constant columns map to 0

    void fit(const std::vector<std::vector<double>>& X) {
        if (X.empty()) throw InvalidArgument("scaler: empty fit data");
        const size_t d = X[0].size();
        means.assign(d, 0.0);
        stds.assign(d, 0.0);
        for (const auto& row : X) {
            if (row.size() != d) throw InvalidArgument("scaler: ragged rows");
            for (size_t j = 0; j < d; ++j) means[j] += row[j];
        }
        for (double& m : means) m /= static_cast<double>(X.size());
        for (const auto& row : X)
            for (size_t j = 0; j < d; ++j) stds[j] += (row[j] - means[j]) * (row[j] - means[j]);
        for (double& s : stds) s = std::max(std::sqrt(s / static_cast<double>(X.size())), 1e-12);
    }

    std::vector<double> transform(const std::vector<double>& x) const {
        if (x.size() != means.size()) throw InvalidArgument("scaler: dimension mismatch");
        std::vector<double> out(x.size());
        for (size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - means[j]) / stds[j];
        return out;
    }

    std::vector<std::vector<double>> transform(const std::vector<std::vector<double>>& X) const {
        std::vector<std::vector<double>> out;
        out.reserve(X.size());
        for (const auto& row : X) out.push_back(transform(row));
        return out;
    }
};

}  // namespace coughlab::ml
