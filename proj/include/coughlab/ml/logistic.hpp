// L2-regularized logistic regression by full-batch gradient descent with
// backtracking line search.
#pragma once

#include <cmath>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::ml {

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    double l2 = 0.0;

    double decision(const std::vector<double>& x) const {
        if (x.size() != weights.size()) throw InvalidArgument("logistic: dimension mismatch");
        double z = bias;
        for (size_t j = 0; j < x.size(); ++j) z += weights[j] * x[j];
        return z;
    }

    double probability(const std::vector<double>& x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }
    int predict(const std::vector<double>& x) const { return decision(x) > 0.0 ? 1 : 0; }
};

namespace logistic_detail {

// Mean binary cross-entropy plus l2 * ||w||^2 / 2; the bias is unpenalized.
inline double loss(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const std::vector<double>& w, double b, double l2) {
    double acc = 0.0;
    for (size_t i = 0; i < X.size(); ++i) {
        double z = b;
        for (size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
        // log(1 + e^-|z|) form avoids overflow for large |z|
        const double margin = y[i] == 1 ? z : -z;
        acc += margin >= 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return acc / static_cast<double>(X.size()) + 0.5 * l2 * reg;
}

inline void gradient(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                     const std::vector<double>& w, double b, double l2, std::vector<double>& gw,
                     double& gb) {
    gw.assign(w.size(), 0.0);
    gb = 0.0;
    for (size_t i = 0; i < X.size(); ++i) {
        double z = b;
        for (size_t j = 0; j < w.size(); ++j) z += w[j] * X[i][j];
        const double p = 1.0 / (1.0 + std::exp(-z));
        const double r = p - static_cast<double>(y[i]);
        for (size_t j = 0; j < w.size(); ++j) gw[j] += r * X[i][j];
        gb += r;
    }
    const double n = static_cast<double>(X.size());
    for (size_t j = 0; j < w.size(); ++j) gw[j] = gw[j] / n + l2 * w[j];
    gb /= n;
}

}  // namespace logistic_detail

inline LogisticModel train_logistic_regression(const std::vector<std::vector<double>>& X,
                                               const std::vector<int>& y, double l2,
                                               double grad_tol = 1e-6, int max_iters = 10000) {
    if (X.empty() || X.size() != y.size()) throw InvalidArgument("logistic: bad training data");
    if (l2 < 0.0) throw InvalidArgument("logistic: negative l2");
    const size_t d = X[0].size();
    for (const auto& row : X) {
        if (row.size() != d) throw InvalidArgument("logistic: ragged rows");
        for (double v : row)
            if (!std::isfinite(v)) throw InvalidArgument("logistic: non-finite input");
    }
    for (int label : y)
        if (label != 0 && label != 1) throw InvalidArgument("logistic: labels must be 0 or 1");

    std::vector<double> w(d, 0.0), gw;
    double b = 0.0, gb = 0.0;
    double loss_now = logistic_detail::loss(X, y, w, b, l2);

    for (int it = 0; it < max_iters; ++it) {
        logistic_detail::gradient(X, y, w, b, l2, gw, gb);
        double inf_norm = std::abs(gb);
        double grad_sq = gb * gb;
        for (double g : gw) {
            inf_norm = std::max(inf_norm, std::abs(g));
            grad_sq += g * g;
        }
        if (inf_norm < grad_tol) break;

        // backtracking with the Armijo condition
        double step = 1.0;
        std::vector<double> w_try(d);
        while (true) {
            for (size_t j = 0; j < d; ++j) w_try[j] = w[j] - step * gw[j];
            const double b_try = b - step * gb;
            const double loss_try = logistic_detail::loss(X, y, w_try, b_try, l2);
            if (loss_try <= loss_now - 1e-4 * step * grad_sq) {
                w = w_try;
                b = b_try;
                loss_now = loss_try;
                break;
            }
            step *= 0.5;
            if (step < 1e-14) break;  // gradient numerically stale; outer loop will exit
        }
        if (step < 1e-14) break;
    }

    LogisticModel model;
    model.weights = std::move(w);
    model.bias = b;
    model.l2 = l2;
    return model;
}

}  // namespace coughlab::ml
