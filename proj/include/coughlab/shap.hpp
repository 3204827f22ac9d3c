// Kernel SHAP: additive feature attributions for any scalar model via the
// Shapley kernel and constrained weighted least squares.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coughlab/common.hpp"

namespace coughlab {

using ModelFn = std::function<double(const std::vector<double>&)>;

// base_value + sum(phi) equals model(x) by construction (local accuracy).
struct ShapExplanation {
    double base_value = 0.0;
    std::vector<double> phi;
    std::vector<double> x;
    double fx = 0.0;
};

namespace explain_detail {

inline double choose(int n, int k) {
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                               std::lgamma(n - k + 1.0)));
}

// Shapley kernel weight for one coalition of size s out of d features
inline double kernel_weight(int d, int s) {
    return (d - 1.0) / (choose(d, s) * s * (d - s));
}

// v(S): model output with absent features taken from a background row,
// averaged over all background rows (interventional semantics)
inline double coalition_value(const ModelFn& model, const std::vector<double>& x,
                              const std::vector<std::vector<double>>& background,
                              uint64_t mask) {
    std::vector<double> z(x.size());
    double total = 0.0;
    for (const auto& row : background) {
        for (size_t i = 0; i < x.size(); ++i) z[i] = (mask >> i) & 1u ? x[i] : row[i];
        total += model(z);
    }
    return total / static_cast<double>(background.size());
}

// Weighted least squares over proper coalitions, with the empty and full
// coalitions enforced exactly: the intercept is pinned to base and the last
// attribution is eliminated through the sum constraint
// sum(phi) = fx - base.
inline std::vector<double> solve_constrained_wls(const std::vector<uint64_t>& masks,
                                                 const std::vector<double>& weights,
                                                 const std::vector<double>& values, int d,
                                                 double base, double fx) {
    const int m = d - 1;
    const double span = fx - base;
    Eigen::MatrixXd A(static_cast<Eigen::Index>(masks.size()), m);
    Eigen::VectorXd y(static_cast<Eigen::Index>(masks.size()));
    for (size_t r = 0; r < masks.size(); ++r) {
        const double z_last = (masks[r] >> (d - 1)) & 1u ? 1.0 : 0.0;
        for (int i = 0; i < m; ++i)
            A(static_cast<Eigen::Index>(r), i) = ((masks[r] >> i) & 1u ? 1.0 : 0.0) - z_last;
        y(static_cast<Eigen::Index>(r)) = values[r] - base - z_last * span;
    }
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                          static_cast<Eigen::Index>(weights.size()));
    const Eigen::MatrixXd Aw = w.asDiagonal() * A;
    const Eigen::MatrixXd M = A.transpose() * Aw;
    const Eigen::VectorXd rhs = Aw.transpose() * y;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible())
        throw DegenerateInput("kernel_shap: weighted least squares system is singular");
    const Eigen::VectorXd head = lu.solve(rhs);

    std::vector<double> phi(d, 0.0);
    double head_sum = 0.0;
    for (int i = 0; i < m; ++i) {
        phi[i] = head(i);
        head_sum += head(i);
    }
    phi[d - 1] = span - head_sum;
    return phi;
}

// Coalitions with their kernel weights. Sizes are consumed outside-in
// (1 and d-1 first); a size is fully enumerated when the budget allows,
// otherwise the leftover budget is spent on coalitions sampled across the
// remaining sizes in proportion to their total kernel mass.
inline std::vector<std::pair<uint64_t, double>> pick_coalitions(int d, int budget,
                                                                uint64_t seed) {
    std::vector<int> size_order;
    for (int s = 1; s <= d - 1 - s; ++s) {
        size_order.push_back(s);
        if (s != d - s) size_order.push_back(d - s);
    }
    if (d % 2 == 0) size_order.push_back(d / 2);

    std::vector<std::pair<uint64_t, double>> out;
    long remaining = budget;
    size_t next = 0;
    for (; next < size_order.size(); ++next) {
        const int s = size_order[next];
        const double count = choose(d, s);
        if (count > static_cast<double>(remaining)) break;
        const double w = kernel_weight(d, s);
        std::vector<int> idx(s);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            uint64_t mask = 0;
            for (int i : idx) mask |= uint64_t(1) << i;
            out.emplace_back(mask, w);
            int j = s - 1;
            while (j >= 0 && idx[j] == d - s + j) --j;
            if (j < 0) break;
            ++idx[j];
            for (int t = j + 1; t < s; ++t) idx[t] = idx[t - 1] + 1;
        }
        remaining -= static_cast<long>(count);
    }
    if (next == size_order.size() || remaining <= 0) return out;

    // sample the rest, size chosen by leftover kernel mass
    std::vector<int> left(size_order.begin() + next, size_order.end());
    std::vector<double> mass(left.size());
    double mass_total = 0.0;
    for (size_t i = 0; i < left.size(); ++i) {
        mass[i] = (d - 1.0) / (left[i] * double(d - left[i]));
        mass_total += mass[i];
    }
    auto rng = make_rng(seed, "shap:coalitions");
    std::discrete_distribution<size_t> pick_size(mass.begin(), mass.end());
    std::vector<int> pool(d);
    std::iota(pool.begin(), pool.end(), 0);
    std::map<uint64_t, double> sampled;
    const double per_draw = mass_total / static_cast<double>(remaining);
    for (long t = 0; t < remaining; ++t) {
        const int s = left[pick_size(rng)];
        for (int i = 0; i < s; ++i) {
            std::uniform_int_distribution<int> u(i, d - 1);
            std::swap(pool[i], pool[u(rng)]);
        }
        uint64_t mask = 0;
        for (int i = 0; i < s; ++i) mask |= uint64_t(1) << pool[i];
        sampled[mask] += per_draw;
    }
    for (const auto& [mask, w] : sampled) out.emplace_back(mask, w);
    return out;
}

inline ShapExplanation explain_with_coalitions(
    const ModelFn& model, const std::vector<double>& x,
    const std::vector<std::vector<double>>& background,
    const std::vector<std::pair<uint64_t, double>>& coalitions) {
    const int d = static_cast<int>(x.size());
    const double base = coalition_value(model, x, background, 0);
    const double fx = model(x);
    if (d == 1) return {base, {fx - base}, x, fx};

    std::vector<uint64_t> masks;
    std::vector<double> weights, values;
    masks.reserve(coalitions.size());
    for (const auto& [mask, w] : coalitions) {
        masks.push_back(mask);
        weights.push_back(w);
        values.push_back(coalition_value(model, x, background, mask));
    }
    auto phi = solve_constrained_wls(masks, weights, values, d, base, fx);
    return {base, std::move(phi), x, fx};
}

inline void validate_inputs(const std::vector<double>& x,
                            const std::vector<std::vector<double>>& background) {
    if (x.empty()) throw InvalidArgument("kernel_shap: empty instance");
    if (x.size() > 63) throw UnsupportedError("kernel_shap: more than 63 features");
    if (background.empty()) throw InvalidArgument("kernel_shap: empty background set");
    for (const auto& row : background)
        if (row.size() != x.size())
            throw InvalidArgument("kernel_shap: background dimension mismatch");
}

}  // namespace explain_detail

// Exact when d <= 12 (every proper coalition enumerated); otherwise
// n_coalitions bounds the number of model-masking rows, and a budget of at
// least 2^d - 2 degenerates to the exact enumeration.
inline ShapExplanation kernel_shap(const ModelFn& model, const std::vector<double>& x,
                                   const std::vector<std::vector<double>>& background,
                                   int n_coalitions, uint64_t seed) {
    using namespace explain_detail;
    validate_inputs(x, background);
    const int d = static_cast<int>(x.size());
    if (n_coalitions < 2 * d)
        throw InvalidArgument("kernel_shap: n_coalitions must be at least 2*d");

    std::vector<std::pair<uint64_t, double>> coalitions;
    if (d == 1) {
        // handled in explain_with_coalitions
    } else if (d <= 12) {
        const uint64_t full = (uint64_t(1) << d) - 1;
        for (uint64_t mask = 1; mask < full; ++mask)
            coalitions.emplace_back(mask, kernel_weight(d, std::popcount(mask)));
    } else {
        coalitions = pick_coalitions(d, n_coalitions, seed);
    }
    return explain_with_coalitions(model, x, background, coalitions);
}

struct ShapSummaryRow {
    int feature = 0;
    double mean_abs_phi = 0.0;
    std::vector<std::pair<double, double>> points;  // (phi, feature value) per instance
};

// Features ranked by mean |phi| descending; ties keep schema order.
inline std::vector<ShapSummaryRow> shap_summary(const std::vector<ShapExplanation>& explanations) {
    if (explanations.empty()) throw InvalidArgument("shap_summary: no explanations");
    const size_t d = explanations.front().phi.size();
    for (const auto& e : explanations)
        if (e.phi.size() != d || e.x.size() != d)
            throw InvalidArgument("shap_summary: inconsistent explanation dimensions");

    std::vector<ShapSummaryRow> rows(d);
    for (size_t i = 0; i < d; ++i) {
        rows[i].feature = static_cast<int>(i);
        for (const auto& e : explanations) {
            rows[i].mean_abs_phi += std::abs(e.phi[i]);
            rows[i].points.emplace_back(e.phi[i], e.x[i]);
        }
        rows[i].mean_abs_phi /= static_cast<double>(explanations.size());
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ShapSummaryRow& a, const ShapSummaryRow& b) {
                         return a.mean_abs_phi > b.mean_abs_phi;
                     });
    return rows;
}

}  // namespace coughlab
