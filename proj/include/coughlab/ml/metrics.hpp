// Binary classification metrics with per-class and macro views.
#pragma once

#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::ml {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0;
};

struct Metrics {
    double accuracy = 0.0;
    ClassMetrics healthy;  // class 0
    ClassMetrics cancer;   // class 1
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    // confusion counts, rows = truth, cols = prediction, order (0, 1)
    size_t counts[2][2] = {{0, 0}, {0, 0}};
};

// Empty denominators follow the 0/0 -> 0 convention throughout.
inline Metrics compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty()) throw InvalidArgument("compute_metrics: empty input");
    if (y_true.size() != y_pred.size()) throw InvalidArgument("compute_metrics: length mismatch");

    Metrics m;
    for (size_t i = 0; i < y_true.size(); ++i) {
        if ((y_true[i] != 0 && y_true[i] != 1) || (y_pred[i] != 0 && y_pred[i] != 1))
            throw InvalidArgument("compute_metrics: labels must be 0 or 1");
        ++m.counts[y_true[i]][y_pred[i]];
    }
    m.accuracy = static_cast<double>(m.counts[0][0] + m.counts[1][1]) / static_cast<double>(y_true.size());

    auto fill = [&](int cls) {
        const double tp = static_cast<double>(m.counts[cls][cls]);
        const double fp = static_cast<double>(m.counts[1 - cls][cls]);
        const double fn = static_cast<double>(m.counts[cls][1 - cls]);
        ClassMetrics c;
        c.support = m.counts[cls][0] + m.counts[cls][1];
        c.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
        c.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
        c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
        return c;
    };
    m.healthy = fill(0);
    m.cancer = fill(1);
    m.macro_precision = (m.healthy.precision + m.cancer.precision) / 2.0;
    m.macro_recall = (m.healthy.recall + m.cancer.recall) / 2.0;
    m.macro_f1 = (m.healthy.f1 + m.cancer.f1) / 2.0;
    return m;
}

}  // namespace coughlab::ml
