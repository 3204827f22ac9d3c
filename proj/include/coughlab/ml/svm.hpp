// Soft-margin SVM trained by sequential minimal optimization with
// maximal-violating-pair working-set selection.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::ml {

enum class SvmKernel { linear, rbf };

inline double kernel_eval(SvmKernel k, double gamma, const std::vector<double>& a,
                          const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvalidArgument("kernel: dimension mismatch");
    if (k == SvmKernel::linear) {
        double dot = 0.0;
        for (size_t j = 0; j < a.size(); ++j) dot += a[j] * b[j];
        return dot;
    }
    double dist_sq = 0.0;
    for (size_t j = 0; j < a.size(); ++j) dist_sq += (a[j] - b[j]) * (a[j] - b[j]);
    return std::exp(-gamma * dist_sq);
}

struct SvmModel {
    SvmKernel kernel = SvmKernel::linear;
    double gamma = 0.0;  // rbf only
    double C = 1.0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;

    double decision(const std::vector<double>& x) const {
        double f = bias;
        for (size_t i = 0; i < support_vectors.size(); ++i)
            f += dual_coefs[i] * kernel_eval(kernel, gamma, support_vectors[i], x);
        return f;
    }

    int predict(const std::vector<double>& x) const { return decision(x) > 0.0 ? 1 : 0; }
};

// Labels in {-1,+1}. Tolerance bounds the final KKT violation: on exit
// max_{I_low} F - min_{I_up} F <= 2*tol, with b chosen midway.
inline SvmModel train_svm_smo(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                              SvmKernel kernel, double C, double gamma = 0.0, double tol = 1e-3,
                              size_t max_iters = 200000) {
    const size_t n = X.size();
    if (n == 0 || y.size() != n) throw InvalidArgument("svm: bad training data");
    if (C <= 0.0) throw InvalidArgument("svm: C must be positive");
    if (kernel == SvmKernel::rbf && gamma <= 0.0) throw InvalidArgument("svm: rbf needs gamma > 0");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        if (label == 1) has_pos = true;
        else if (label == -1) has_neg = true;
        else throw InvalidArgument("svm: labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw InvalidArgument("svm: both classes required");

    // full Gram matrix; training sets here are small
    std::vector<std::vector<double>> K(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i; j < n; ++j) K[i][j] = K[j][i] = kernel_eval(kernel, gamma, X[i], X[j]);

    std::vector<double> alpha(n, 0.0);
    // F_i = sum_j alpha_j y_j K_ij - y_i  (decision minus bias minus label)
    std::vector<double> F(n);
    for (size_t i = 0; i < n; ++i) F[i] = -static_cast<double>(y[i]);

    auto in_up = [&](size_t i) { return (y[i] == 1 && alpha[i] < C) || (y[i] == -1 && alpha[i] > 0.0); };
    auto in_low = [&](size_t i) { return (y[i] == -1 && alpha[i] < C) || (y[i] == 1 && alpha[i] > 0.0); };

    size_t iter = 0;
    for (; iter < max_iters; ++iter) {
        // maximal violating pair
        double f_up = std::numeric_limits<double>::infinity();
        double f_low = -std::numeric_limits<double>::infinity();
        size_t i_up = n, i_low = n;
        for (size_t i = 0; i < n; ++i) {
            if (in_up(i) && F[i] < f_up) {
                f_up = F[i];
                i_up = i;
            }
            if (in_low(i) && F[i] > f_low) {
                f_low = F[i];
                i_low = i;
            }
        }
        if (i_up == n || i_low == n || f_low - f_up <= 2.0 * tol) break;

        const size_t i = i_up, j = i_low;
        const double yi = y[i], yj = y[j];
        const double s = yi * yj;
        double L, H;
        if (s < 0.0) {
            L = std::max(0.0, alpha[j] - alpha[i]);
            H = std::min(C, C + alpha[j] - alpha[i]);
        } else {
            L = std::max(0.0, alpha[i] + alpha[j] - C);
            H = std::min(C, alpha[i] + alpha[j]);
        }
        const double eta = K[i][i] + K[j][j] - 2.0 * K[i][j];
        double aj_new;
        if (eta > 1e-12) {
            aj_new = alpha[j] + yj * (F[i] - F[j]) / eta;
            aj_new = std::clamp(aj_new, L, H);
        } else {
            // flat direction: the dual objective is linear in alpha_j, so the
            // optimum sits at whichever bound the slope favours
            const double slope = yj * (F[i] - F[j]);
            aj_new = slope > 0.0 ? H : L;
        }
        if (std::abs(aj_new - alpha[j]) < 1e-14) break;  // numerically stuck pair

        const double ai_new = alpha[i] + s * (alpha[j] - aj_new);
        const double di = (ai_new - alpha[i]) * yi;
        const double dj = (aj_new - alpha[j]) * yj;
        alpha[i] = ai_new;
        alpha[j] = aj_new;
        for (size_t k = 0; k < n; ++k) F[k] += di * K[i][k] + dj * K[j][k];
    }
    if (iter == max_iters) throw TrainingError("svm: SMO failed to converge");

    // bias: free support vectors satisfy y_i f(x_i) = 1, giving b = -F_i;
    // average those, else take the midpoint of the remaining KKT gap
    double b_acc = 0.0;
    size_t b_count = 0;
    for (size_t i = 0; i < n; ++i)
        if (alpha[i] > 1e-8 && alpha[i] < C - 1e-8) {
            b_acc += -F[i];
            ++b_count;
        }
    double bias;
    if (b_count > 0) {
        bias = b_acc / static_cast<double>(b_count);
    } else {
        double f_up = std::numeric_limits<double>::infinity();
        double f_low = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            if (in_up(i)) f_up = std::min(f_up, F[i]);
            if (in_low(i)) f_low = std::max(f_low, F[i]);
        }
        bias = -(f_up + f_low) / 2.0;
    }

    SvmModel model;
    model.kernel = kernel;
    model.gamma = gamma;
    model.C = C;
    model.bias = bias;
    for (size_t i = 0; i < n; ++i)
        if (alpha[i] > 1e-8) {
            model.support_vectors.push_back(X[i]);
            model.dual_coefs.push_back(alpha[i] * static_cast<double>(y[i]));
        }
    return model;
}

}  // namespace coughlab::ml
