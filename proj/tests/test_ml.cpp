#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "coughlab/ml/cv.hpp"
#include "coughlab/ml/model_io.hpp"

using namespace coughlab;
using namespace coughlab::ml;
using Catch::Approx;

namespace {

std::vector<std::vector<double>> random_X(size_t n, size_t d, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<std::vector<double>> X(n, std::vector<double>(d));
    for (auto& row : X)
        for (auto& v : row) v = dist(rng);
    return X;
}

// labels from a linear rule with label noise, in {-1,+1}
std::vector<int> noisy_linear_labels(const std::vector<std::vector<double>>& X, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<int> y(X.size());
    for (size_t i = 0; i < X.size(); ++i) {
        double z = 0.0;
        for (size_t j = 0; j < X[i].size(); ++j) z += (j % 2 == 0 ? 1.0 : -0.5) * X[i][j];
        y[i] = z > 0.0 ? 1 : -1;
        if (coin(rng) < 0.1) y[i] = -y[i];
    }
    return y;
}

}  // namespace

TEST_CASE("standard scaler centres and scales") {
    StandardScaler s;
    s.fit({{1.0, 10.0}, {3.0, 10.0}});
    CHECK(s.means[0] == Approx(2.0));
    CHECK(s.stds[0] == Approx(1.0));
    const auto z = s.transform(std::vector<double>{3.0, 10.0});
    CHECK(z[0] == Approx(1.0));
    CHECK(z[1] == 0.0);  // constant column maps to zero, no blow-up
    CHECK_THROWS_AS(s.transform(std::vector<double>{1.0}), InvalidArgument);
}

TEST_CASE("metrics reproduce the held-out confusion arithmetic") {
    // healthy: 8 right, 3 missed; cancer: 10 right, 2 missed
    std::vector<int> y_true, y_pred;
    auto add = [&](int t, int p, int count) {
        for (int i = 0; i < count; ++i) {
            y_true.push_back(t);
            y_pred.push_back(p);
        }
    };
    add(0, 0, 8);
    add(0, 1, 3);
    add(1, 1, 10);
    add(1, 0, 2);
    const auto m = compute_metrics(y_true, y_pred);
    CHECK(m.accuracy == Approx(18.0 / 23.0));
    CHECK(m.healthy.precision == Approx(0.8));
    CHECK(m.healthy.recall == Approx(8.0 / 11.0));
    CHECK(m.cancer.precision == Approx(10.0 / 13.0));
    CHECK(m.cancer.recall == Approx(10.0 / 12.0));
    CHECK(m.macro_f1 == Approx((m.healthy.f1 + m.cancer.f1) / 2.0));
    // rounds to the reported two decimals
    CHECK(round_to(m.accuracy, 2) == Approx(0.78));
    CHECK(round_to(m.macro_f1, 2) == Approx(0.78));
}

TEST_CASE("metrics: degenerate predictors") {
    const auto perfect = compute_metrics({0, 1, 0, 1}, {0, 1, 0, 1});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);

    const auto all_cancer = compute_metrics({0, 0, 1, 1}, {1, 1, 1, 1});
    CHECK(all_cancer.accuracy == 0.5);
    CHECK(all_cancer.cancer.recall == 1.0);
    CHECK(all_cancer.healthy.recall == 0.0);
    CHECK(all_cancer.healthy.precision == 0.0);  // 0/0 convention
    CHECK(all_cancer.healthy.f1 == 0.0);
}

TEST_CASE("logistic regression: symmetric separable case") {
    const std::vector<std::vector<double>> X{{-2.0}, {-1.0}, {1.0}, {2.0}};
    const auto m = train_logistic_regression(X, {0, 0, 1, 1}, 0.0);
    REQUIRE(m.weights.size() == 1);
    CHECK(m.weights[0] > 0.0);
    CHECK(std::abs(m.bias / m.weights[0]) < 0.05);  // boundary at x = 0
    CHECK(m.predict({-0.5}) == 0);
    CHECK(m.predict({0.5}) == 1);
}

TEST_CASE("logistic regression: single-class data saturates upward") {
    const auto X = random_X(20, 3, 2);
    const auto m = train_logistic_regression(X, std::vector<int>(20, 1), 0.1);
    CHECK(m.bias > 0.0);
    for (const auto& row : X) CHECK(m.probability(row) > 0.5);
    for (double w : m.weights) CHECK(std::abs(w) < 0.5);
}

TEST_CASE("logistic gradient matches central finite differences") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const size_t n = 50, d = 5;
        const auto X = random_X(n, d, seed);
        std::mt19937_64 rng(seed + 100);
        std::uniform_int_distribution<int> lab(0, 1);
        std::normal_distribution<double> dist(0.0, 0.5);
        std::vector<int> y(n);
        for (auto& v : y) v = lab(rng);
        std::vector<double> w(d);
        for (auto& v : w) v = dist(rng);
        const double b = dist(rng), l2 = 0.05;

        std::vector<double> gw;
        double gb;
        logistic_detail::gradient(X, y, w, b, l2, gw, gb);

        const double eps = 1e-6;
        for (size_t j = 0; j < d; ++j) {
            auto wp = w, wm = w;
            wp[j] += eps;
            wm[j] -= eps;
            const double fd = (logistic_detail::loss(X, y, wp, b, l2) -
                               logistic_detail::loss(X, y, wm, b, l2)) /
                              (2.0 * eps);
            CHECK(gw[j] == Approx(fd).epsilon(1e-5).margin(1e-9));
        }
        const double fd_b = (logistic_detail::loss(X, y, w, b + eps, l2) -
                             logistic_detail::loss(X, y, w, b - eps, l2)) /
                            (2.0 * eps);
        CHECK(gb == Approx(fd_b).epsilon(1e-5).margin(1e-9));
    }
}

TEST_CASE("logistic training lowers the loss") {
    const auto X = random_X(40, 4, 7);
    auto y_pm = noisy_linear_labels(X, 7);
    std::vector<int> y(y_pm.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = y_pm[i] == 1 ? 1 : 0;
    const auto m = train_logistic_regression(X, y, 0.01);
    const double trained = logistic_detail::loss(X, y, m.weights, m.bias, 0.01);
    const double at_zero = logistic_detail::loss(X, y, std::vector<double>(4, 0.0), 0.0, 0.01);
    CHECK(trained < at_zero);
}

TEST_CASE("svm: two-point closed form") {
    const auto m = train_svm_smo({{-1.0}, {1.0}}, {-1, 1}, SvmKernel::linear, 10.0);
    REQUIRE(m.support_vectors.size() == 2);
    CHECK(std::abs(m.dual_coefs[0]) == Approx(0.5).margin(1e-3));
    CHECK(std::abs(m.dual_coefs[1]) == Approx(0.5).margin(1e-3));
    CHECK(m.decision({0.0}) == Approx(0.0).margin(1e-3));
    CHECK(m.decision({1.0}) == Approx(1.0).margin(1e-2));
    CHECK(m.decision({-1.0}) == Approx(-1.0).margin(1e-2));
}

TEST_CASE("svm: rbf separates xor") {
    const std::vector<std::vector<double>> X{{1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
    const std::vector<int> y{1, 1, -1, -1};
    const auto m = train_svm_smo(X, y, SvmKernel::rbf, 10.0, 1.0);
    for (size_t i = 0; i < X.size(); ++i)
        CHECK((m.decision(X[i]) > 0.0 ? 1 : -1) == y[i]);
}

TEST_CASE("svm guards") {
    CHECK_THROWS_AS(train_svm_smo({{1.0}, {2.0}}, {1, 1}, SvmKernel::linear, 1.0), InvalidArgument);
    CHECK_THROWS_AS(train_svm_smo({{1.0}, {2.0}}, {1, -1}, SvmKernel::linear, -1.0), InvalidArgument);
    CHECK_THROWS_AS(train_svm_smo({{1.0}, {2.0}}, {1, -1}, SvmKernel::rbf, 1.0, 0.0), InvalidArgument);
}

namespace {

// dense projected-gradient ascent on the SVM dual, used as an oracle:
// maximize sum(a) - 0.5 aT M a with M_ij = y_i y_j K_ij over the box
// intersected with the hyperplane yT a = 0
std::vector<double> qp_oracle(const std::vector<std::vector<double>>& K, const std::vector<int>& y,
                              double C, int iters) {
    const size_t n = K.size();
    std::vector<std::vector<double>> M(n, std::vector<double>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) M[i][j] = y[i] * y[j] * K[i][j];

    auto project = [&](std::vector<double> v) {
        double lo = -1e4, hi = 1e4;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            double s = 0.0;
            for (size_t i = 0; i < n; ++i)
                s += y[i] * std::clamp(v[i] + mid * y[i], 0.0, C);
            (s < 0.0 ? lo : hi) = mid;
        }
        const double nu = 0.5 * (lo + hi);
        for (size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i] + nu * y[i], 0.0, C);
        return v;
    };

    double lipschitz = 1e-9;
    for (size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (size_t j = 0; j < n; ++j) row += std::abs(M[i][j]);
        lipschitz = std::max(lipschitz, row);
    }
    const double eta = 1.0 / lipschitz;

    std::vector<double> a(n, 0.0), grad(n);
    for (int it = 0; it < iters; ++it) {
        for (size_t i = 0; i < n; ++i) {
            grad[i] = 1.0;
            for (size_t j = 0; j < n; ++j) grad[i] -= M[i][j] * a[j];
        }
        for (size_t i = 0; i < n; ++i) a[i] += eta * grad[i];
        a = project(std::move(a));
    }
    return a;
}

double dual_value(const std::vector<double>& a, const std::vector<std::vector<double>>& K,
                  const std::vector<int>& y) {
    double val = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        val += a[i];
        for (size_t j = 0; j < a.size(); ++j) val -= 0.5 * a[i] * a[j] * y[i] * y[j] * K[i][j];
    }
    return val;
}

}  // namespace

TEST_CASE("svm dual matches a projected-gradient oracle and satisfies KKT") {
    for (auto [kernel, gamma, seed] : {std::tuple{SvmKernel::linear, 0.0, 11ull},
                                       std::tuple{SvmKernel::rbf, 0.5, 12ull}}) {
        const size_t n = 20;
        const double C = 5.0, tol = 1e-3;
        const auto X = random_X(n, 3, seed);
        const auto y = noisy_linear_labels(X, seed);
        const auto m = train_svm_smo(X, y, kernel, C, gamma, tol);

        // recover the full alpha vector: zero except at support vectors
        std::vector<double> alpha(n, 0.0);
        std::vector<std::vector<double>> K(n, std::vector<double>(n));
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) K[i][j] = kernel_eval(kernel, gamma, X[i], X[j]);
        double coef_sum = 0.0;
        for (size_t s = 0; s < m.support_vectors.size(); ++s) {
            coef_sum += m.dual_coefs[s];
            for (size_t i = 0; i < n; ++i)
                if (X[i] == m.support_vectors[s]) {
                    alpha[i] = std::abs(m.dual_coefs[s]);
                    break;
                }
        }
        CHECK(std::abs(coef_sum) < 1e-6);  // sum alpha_i y_i = 0
        for (double a : alpha) {
            CHECK(a >= -1e-9);
            CHECK(a <= C + 1e-9);
        }

        // KKT at the guaranteed 2*tol level
        for (size_t i = 0; i < n; ++i) {
            const double yf = y[i] * m.decision(X[i]);
            if (alpha[i] < 1e-8)
                CHECK(yf >= 1.0 - 2.0 * tol - 1e-9);
            else if (alpha[i] > C - 1e-8)
                CHECK(yf <= 1.0 + 2.0 * tol + 1e-9);
            else
                CHECK(std::abs(yf - 1.0) <= 2.0 * tol + 1e-9);
        }

        const double smo_dual = dual_value(alpha, K, y);
        const double pg_dual = dual_value(qp_oracle(K, y, C, 50000), K, y);
        CHECK(std::abs(smo_dual - pg_dual) <= 1e-2);
        CHECK(smo_dual >= pg_dual - 1e-2);
    }
}

TEST_CASE("gbt: single stump finds the step") {
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (int i = -10; i <= 10; ++i) {
        if (i == 0) continue;
        X.push_back({0.1 * i});
        y.push_back(i < 0 ? 0 : 1);
    }
    GbtParams p;
    p.n_rounds = 1;
    p.max_depth = 1;
    const auto m = train_gbt(X, y, p);
    REQUIRE(m.trees.size() == 1);
    const auto& root = m.trees[0].nodes[0];
    REQUIRE(root.feature == 0);
    CHECK(root.threshold > -0.1);
    CHECK(root.threshold < 0.1);
    CHECK(m.trees[0].nodes[root.left].weight < 0.0);
    CHECK(m.trees[0].nodes[root.right].weight > 0.0);
}

TEST_CASE("gbt: constant labels give single-leaf trees") {
    const auto X = random_X(15, 3, 4);
    GbtParams p;
    p.n_rounds = 30;
    const auto m = train_gbt(X, std::vector<int>(15, 1), p);
    for (const auto& t : m.trees) {
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].feature == -1);
    }
    CHECK(m.probability(X[0]) > 0.9);
    CHECK(m.probability(random_X(1, 3, 99)[0]) == Approx(m.probability(X[0])));
}

namespace {

// independent exhaustive depth-2 tree builder over the same gain formula
struct OracleNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double weight = 0.0;
    std::unique_ptr<OracleNode> left, right;
};

std::unique_ptr<OracleNode> oracle_build(const std::vector<std::vector<double>>& X,
                                         const std::vector<double>& g, const std::vector<double>& h,
                                         std::vector<size_t> idx, int depth, int max_depth,
                                         double lambda) {
    auto node = std::make_unique<OracleNode>();
    double G = 0.0, H = 0.0;
    for (size_t i : idx) {
        G += g[i];
        H += h[i];
    }
    double best_gain = 0.0;
    int best_f = -1;
    double best_t = 0.0;
    if (depth < max_depth) {
        for (size_t f = 0; f < X[0].size(); ++f) {
            // enumerate midpoints of every distinct value pair, brute force
            std::vector<double> vals;
            for (size_t i : idx) vals.push_back(X[i][f]);
            std::sort(vals.begin(), vals.end());
            for (size_t k = 0; k + 1 < vals.size(); ++k) {
                if (vals[k] == vals[k + 1]) continue;
                const double t = (vals[k] + vals[k + 1]) / 2.0;
                double GL = 0.0, HL = 0.0;
                for (size_t i : idx)
                    if (X[i][f] < t) {
                        GL += g[i];
                        HL += h[i];
                    }
                const double GR = G - GL, HR = H - HL;
                const double gain = 0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) -
                                           G * G / (H + lambda));
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = static_cast<int>(f);
                    best_t = t;
                }
            }
        }
    }
    if (best_f < 0) {
        node->weight = -G / (H + lambda);
        return node;
    }
    node->leaf = false;
    node->feature = best_f;
    node->threshold = best_t;
    std::vector<size_t> li, ri;
    for (size_t i : idx) (X[i][best_f] < best_t ? li : ri).push_back(i);
    node->left = oracle_build(X, g, h, li, depth + 1, max_depth, lambda);
    node->right = oracle_build(X, g, h, ri, depth + 1, max_depth, lambda);
    return node;
}

void compare_tree(const RegressionTree& tree, int at, const OracleNode& oracle) {
    const auto& n = tree.nodes[at];
    if (oracle.leaf) {
        REQUIRE(n.feature == -1);
        CHECK(n.weight == Approx(oracle.weight).margin(1e-12));
        return;
    }
    REQUIRE(n.feature == oracle.feature);
    CHECK(n.threshold == Approx(oracle.threshold).margin(1e-12));
    compare_tree(tree, n.left, *oracle.left);
    compare_tree(tree, n.right, *oracle.right);
}

}  // namespace

TEST_CASE("gbt first tree matches the exhaustive oracle") {
    for (uint64_t seed : {21ull, 22ull, 23ull}) {
        const size_t n = 30;
        const auto X = random_X(n, 4, seed);
        const auto y_pm = noisy_linear_labels(X, seed);
        std::vector<int> y(n);
        for (size_t i = 0; i < n; ++i) y[i] = y_pm[i] == 1 ? 1 : 0;

        GbtParams p;
        p.n_rounds = 1;
        p.max_depth = 2;
        const auto m = train_gbt(X, y, p);

        // at round one every p_i = 0.5
        std::vector<double> g(n), h(n);
        for (size_t i = 0; i < n; ++i) {
            g[i] = 0.5 - static_cast<double>(y[i]);
            h[i] = 0.25;
        }
        std::vector<size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        const auto oracle = oracle_build(X, g, h, idx, 0, 2, p.lambda);
        compare_tree(m.trees[0], 0, *oracle);
    }
}

TEST_CASE("gbt training loss never increases over rounds") {
    const size_t n = 40;
    const auto X = random_X(n, 3, 31);
    const auto y_pm = noisy_linear_labels(X, 31);
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) y[i] = y_pm[i] == 1 ? 1 : 0;

    GbtParams p;
    p.n_rounds = 25;
    p.max_depth = 2;
    p.gamma = 0.0;
    const auto m = train_gbt(X, y, p);

    std::vector<double> raw(n, 0.0);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& tree : m.trees) {
        for (size_t i = 0; i < n; ++i) raw[i] += p.learning_rate * tree.predict(X[i]);
        double loss = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double margin = y[i] == 1 ? raw[i] : -raw[i];
            loss += margin >= 0.0 ? std::log1p(std::exp(-margin))
                                  : -margin + std::log1p(std::exp(margin));
        }
        CHECK(loss <= prev + 1e-12);
        prev = loss;
    }
}

TEST_CASE("stratified grouped kfold balances classes") {
    SECTION("10 + 10 singleton groups split 2 + 2") {
        std::vector<int> y;
        std::vector<std::string> groups;
        for (int i = 0; i < 20; ++i) {
            y.push_back(i < 10 ? 0 : 1);
            groups.push_back("g" + std::to_string(i));
        }
        const auto folds = stratified_group_kfold(y, groups, 5, 3);
        for (int f = 0; f < 5; ++f) {
            int c0 = 0, c1 = 0;
            for (size_t i = 0; i < y.size(); ++i)
                if (folds[i] == f) (y[i] == 0 ? c0 : c1)++;
            CHECK(c0 == 2);
            CHECK(c1 == 2);
        }
    }
    SECTION("all segments of a subject share a fold") {
        std::vector<int> y{0, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
        std::vector<std::string> groups{"a", "a", "a", "b", "b", "b", "c", "d", "e", "f", "g",
                                        "h", "i", "j", "k", "l", "m", "n", "o", "p", "q", "r"};
        const auto folds = stratified_group_kfold(y, groups, 2, 5);
        CHECK(folds[0] == folds[1]);
        CHECK(folds[1] == folds[2]);
        CHECK(folds[3] == folds[4]);
        CHECK(folds[4] == folds[5]);
    }
    SECTION("cohort-sized strata give near-equal fold counts") {
        std::vector<int> y;
        std::vector<std::string> groups;
        for (int i = 0; i < 118; ++i) {
            y.push_back(1);
            groups.push_back("c" + std::to_string(i));
        }
        for (int i = 0; i < 109; ++i) {
            y.push_back(0);
            groups.push_back("h" + std::to_string(i));
        }
        const auto folds = stratified_group_kfold(y, groups, 5, 17);
        for (int f = 0; f < 5; ++f) {
            int cancer = 0, healthy = 0;
            for (size_t i = 0; i < y.size(); ++i)
                if (folds[i] == f) (y[i] == 1 ? cancer : healthy)++;
            CHECK((cancer == 23 || cancer == 24));
            CHECK((healthy == 21 || healthy == 22));
        }
    }
    SECTION("partition and determinism") {
        std::vector<int> y;
        std::vector<std::string> groups;
        for (int i = 0; i < 30; ++i) {
            y.push_back(i % 2);
            groups.push_back("s" + std::to_string(i));
        }
        const auto a = stratified_group_kfold(y, groups, 5, 7);
        const auto b = stratified_group_kfold(y, groups, 5, 7);
        CHECK(a == b);
        for (int f : a) {
            CHECK(f >= 0);
            CHECK(f < 5);
        }
    }
    SECTION("guards") {
        CHECK_THROWS_AS(stratified_group_kfold({0, 1}, {"a", "b"}, 5, 1), InvalidArgument);
        CHECK_THROWS_AS(stratified_group_kfold({0, 1}, {"a", "a"}, 2, 1), InvalidArgument);
    }
}

namespace {

Dataset separable_dataset(size_t per_class, uint64_t seed) {
    Dataset d;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 0.3);
    for (size_t i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? 0 : 1;
        const double cx = label == 0 ? -2.0 : 2.0;
        d.X.push_back({cx + dist(rng), dist(rng)});
        d.y.push_back(label);
        d.groups.push_back("s" + std::to_string(i));
    }
    return d;
}

}  // namespace

TEST_CASE("grid search on separable data reaches perfect accuracy") {
    const auto data = separable_dataset(15, 41);
    std::vector<HyperParams> grid;
    for (double C : {0.01, 100.0}) {
        HyperParams hp;
        hp.family = ModelFamily::svm;
        hp.kernel = SvmKernel::linear;
        hp.C = C;
        grid.push_back(hp);
    }
    const auto res = grid_search_cv(data, grid, 5, 13);
    REQUIRE(res.results.size() == 2);
    CHECK(res.results[res.best_index].mean_accuracy == 1.0);
    const auto pred = res.best_model.predict(data.X);
    CHECK(compute_metrics(data.y, pred).accuracy == 1.0);
}

TEST_CASE("grid search: duplicated points evaluate identically") {
    const auto data = separable_dataset(10, 42);
    HyperParams hp;
    hp.family = ModelFamily::logistic;
    hp.l2 = 0.1;
    const auto res = grid_search_cv(data, {hp, hp}, 5, 21);
    REQUIRE(res.results.size() == 2);
    CHECK(res.results[0].fold_accuracies == res.results[1].fold_accuracies);
    CHECK(res.results[0].mean_accuracy == res.results[1].mean_accuracy);
    CHECK(res.best_index == 0);  // tie resolves to grid order
}

TEST_CASE("grid search is deterministic under a fixed seed") {
    const auto data = separable_dataset(12, 43);
    const auto grid = default_grid(ModelFamily::gbt, data.dim());
    REQUIRE(grid.size() == 8);
    const auto a = grid_search_cv(data, grid, 5, 99);
    const auto b = grid_search_cv(data, grid, 5, 99);
    CHECK(a.best_index == b.best_index);
    for (size_t i = 0; i < a.results.size(); ++i)
        CHECK(a.results[i].fold_accuracies == b.results[i].fold_accuracies);
}

TEST_CASE("grid search rejects an empty grid") {
    const auto data = separable_dataset(10, 44);
    CHECK_THROWS_AS(grid_search_cv(data, {}, 5, 1), InvalidArgument);
}

TEST_CASE("default svm grid covers both kernels with resolved gamma") {
    const auto grid = default_grid(ModelFamily::svm, 25);
    CHECK(grid.size() == 20);  // 4 C values x (linear + 4 gammas)
    bool has_inverse_dim = false;
    for (const auto& hp : grid)
        if (hp.kernel == SvmKernel::rbf && hp.gamma == Approx(1.0 / 25.0)) has_inverse_dim = true;
    CHECK(has_inverse_dim);
}

TEST_CASE("model io round-trips every family") {
    const auto data = separable_dataset(10, 50);
    const auto probe = random_X(20, 2, 51);
    const std::vector<std::string> schema{"f0", "f1"};

    for (ModelFamily family : {ModelFamily::logistic, ModelFamily::svm, ModelFamily::gbt}) {
        HyperParams hp;
        hp.family = family;
        hp.kernel = SvmKernel::rbf;
        hp.gamma = 0.7;
        hp.C = 3.0;
        hp.gbt.n_rounds = 12;
        const auto clf = train_classifier(data, hp, schema);
        const auto path = "/tmp/coughlab_model_" + to_string(family) + ".json";
        save_model(path, clf);
        const auto back = load_model(path);
        CHECK(back.feature_names == schema);
        for (const auto& x : probe) {
            CHECK(back.decision(x) == Approx(clf.decision(x)).margin(1e-12));
            CHECK(back.predict(x) == clf.predict(x));
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("model io rejects foreign files") {
    const std::string path = "/tmp/coughlab_not_a_model.json";
    {
        std::ofstream out(path);
        out << "{\"format\": \"something-else\", \"version\": 1}\n";
    }
    CHECK_THROWS_AS(load_model(path), FormatError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_model("/tmp/coughlab_missing_model.json"), IoError);
}
