// Second-order gradient-boosted regression trees for logistic loss, exact
// greedy split search.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::ml {

struct GbtParams {
    int n_rounds = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // per-split penalty
};

// Nodes stored in a flat vector; leaves have feature = -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& x) const {
        int at = 0;
        while (nodes[at].feature >= 0)
            at = x[nodes[at].feature] < nodes[at].threshold ? nodes[at].left : nodes[at].right;
        return nodes[at].weight;
    }
};

struct GbtModel {
    GbtParams params;
    std::vector<RegressionTree> trees;

    // raw score; the model starts from log-odds 0 (probability one half)
    double decision(const std::vector<double>& x) const {
        double score = 0.0;
        for (const auto& t : trees) score += params.learning_rate * t.predict(x);
        return score;
    }

    double probability(const std::vector<double>& x) const { return 1.0 / (1.0 + std::exp(-decision(x))); }
    int predict(const std::vector<double>& x) const { return decision(x) > 0.0 ? 1 : 0; }
};

namespace gbt_detail {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy search over all features and midpoint thresholds. Scan order
// (feature ascending, threshold ascending) with strict improvement makes the
// winner deterministic.
inline Split best_split(const std::vector<std::vector<double>>& X, const std::vector<double>& g,
                        const std::vector<double>& h, const std::vector<size_t>& idx, double lambda,
                        double gamma) {
    const size_t d = X[0].size();
    double g_total = 0.0, h_total = 0.0;
    for (size_t i : idx) {
        g_total += g[i];
        h_total += h[i];
    }
    const double parent_score = g_total * g_total / (h_total + lambda);

    Split best;
    std::vector<size_t> order(idx);
    for (size_t f = 0; f < d; ++f) {
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return X[a][f] < X[b][f]; });
        double g_left = 0.0, h_left = 0.0;
        for (size_t k = 0; k + 1 < order.size(); ++k) {
            g_left += g[order[k]];
            h_left += h[order[k]];
            const double lo = X[order[k]][f], hi = X[order[k + 1]][f];
            if (lo == hi) continue;  // no threshold separates equal values
            const double g_right = g_total - g_left, h_right = h_total - h_left;
            const double gain = 0.5 * (g_left * g_left / (h_left + lambda) +
                                       g_right * g_right / (h_right + lambda) - parent_score) -
                                gamma;
            if (gain > best.gain) {
                best.feature = static_cast<int>(f);
                best.threshold = (lo + hi) / 2.0;
                best.gain = gain;
            }
        }
    }
    return best;
}

inline int build_node(RegressionTree& tree, const std::vector<std::vector<double>>& X,
                      const std::vector<double>& g, const std::vector<double>& h,
                      const std::vector<size_t>& idx, int depth, const GbtParams& p) {
    const int at = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double g_sum = 0.0, h_sum = 0.0;
    for (size_t i : idx) {
        g_sum += g[i];
        h_sum += h[i];
    }

    if (depth < p.max_depth && idx.size() >= 2) {
        const auto split = best_split(X, g, h, idx, p.lambda, p.gamma);
        if (split.feature >= 0 && split.gain > 0.0) {
            std::vector<size_t> left_idx, right_idx;
            for (size_t i : idx)
                (X[i][split.feature] < split.threshold ? left_idx : right_idx).push_back(i);
            tree.nodes[at].feature = split.feature;
            tree.nodes[at].threshold = split.threshold;
            const int l = build_node(tree, X, g, h, left_idx, depth + 1, p);
            const int r = build_node(tree, X, g, h, right_idx, depth + 1, p);
            tree.nodes[at].left = l;
            tree.nodes[at].right = r;
            return at;
        }
    }
    tree.nodes[at].weight = -g_sum / (h_sum + p.lambda);
    return at;
}

}  // namespace gbt_detail

inline GbtModel train_gbt(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                          const GbtParams& params = {}) {
    const size_t n = X.size();
    if (n == 0 || y.size() != n) throw InvalidArgument("gbt: bad training data");
    if (params.n_rounds <= 0 || params.max_depth <= 0) throw InvalidArgument("gbt: bad parameters");
    if (params.lambda < 0.0 || params.learning_rate <= 0.0) throw InvalidArgument("gbt: bad parameters");
    for (int label : y)
        if (label != 0 && label != 1) throw InvalidArgument("gbt: labels must be 0 or 1");

    GbtModel model;
    model.params = params;

    std::vector<double> raw(n, 0.0), g(n), h(n);
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    for (int round = 0; round < params.n_rounds; ++round) {
        for (size_t i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-raw[i]));
            g[i] = p - static_cast<double>(y[i]);
            h[i] = p * (1.0 - p);
        }
        RegressionTree tree;
        gbt_detail::build_node(tree, X, g, h, all, 0, params);
        for (size_t i = 0; i < n; ++i) raw[i] += params.learning_rate * tree.predict(X[i]);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace coughlab::ml
