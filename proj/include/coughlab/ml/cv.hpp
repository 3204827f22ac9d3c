// Hyperparameter descriptions, stratified grouped K-fold, and grid-search
// cross-validation shared by the three classical model families.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/ml/dataset.hpp"
#include "coughlab/ml/gbt.hpp"
#include "coughlab/ml/logistic.hpp"
#include "coughlab/ml/metrics.hpp"
#include "coughlab/ml/scaler.hpp"
#include "coughlab/ml/svm.hpp"

namespace coughlab::ml {

enum class ModelFamily { logistic, svm, gbt };

inline std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::logistic: return "logistic";
        case ModelFamily::svm: return "svm";
        case ModelFamily::gbt: return "gbt";
    }
    throw InvalidArgument("unknown model family");
}

struct HyperParams {
    ModelFamily family = ModelFamily::logistic;
    double l2 = 0.01;                       // logistic
    SvmKernel kernel = SvmKernel::linear;   // svm
    double C = 1.0;
    double gamma = 0.0;
    GbtParams gbt;

    std::string describe() const {
        char buf[160];
        switch (family) {
            case ModelFamily::logistic:
                std::snprintf(buf, sizeof buf, "logistic l2=%g", l2);
                break;
            case ModelFamily::svm:
                if (kernel == SvmKernel::linear)
                    std::snprintf(buf, sizeof buf, "svm linear C=%g", C);
                else
                    std::snprintf(buf, sizeof buf, "svm rbf C=%g gamma=%g", C, gamma);
                break;
            case ModelFamily::gbt:
                std::snprintf(buf, sizeof buf, "gbt rounds=%d depth=%d lr=%g", gbt.n_rounds,
                              gbt.max_depth, gbt.learning_rate);
                break;
        }
        return buf;
    }
};

// A fitted model bundled with its scaler and input schema; raw feature rows
// go in, standardization happens inside.
struct Classifier {
    HyperParams params;
    StandardScaler scaler;
    std::vector<std::string> feature_names;
    std::variant<LogisticModel, SvmModel, GbtModel> model;

    double decision(const std::vector<double>& raw) const {
        const auto x = scaler.transform(raw);
        return std::visit([&](const auto& m) { return m.decision(x); }, model);
    }

    int predict(const std::vector<double>& raw) const { return decision(raw) > 0.0 ? 1 : 0; }

    std::vector<int> predict(const std::vector<std::vector<double>>& rows) const {
        std::vector<int> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(predict(r));
        return out;
    }
};

inline Classifier train_classifier(const Dataset& data, const HyperParams& hp,
                                   const std::vector<std::string>& feature_names = {}) {
    validate_dataset(data);
    Classifier clf;
    clf.params = hp;
    clf.feature_names = feature_names;
    clf.scaler.fit(data.X);
    const auto Xs = clf.scaler.transform(data.X);

    switch (hp.family) {
        case ModelFamily::logistic:
            clf.model = train_logistic_regression(Xs, data.y, hp.l2);
            break;
        case ModelFamily::svm: {
            std::vector<int> y_pm(data.y.size());
            for (size_t i = 0; i < data.y.size(); ++i) y_pm[i] = data.y[i] == 1 ? 1 : -1;
            clf.model = train_svm_smo(Xs, y_pm, hp.kernel, hp.C, hp.gamma);
            break;
        }
        case ModelFamily::gbt:
            clf.model = train_gbt(Xs, data.y, hp.gbt);
            break;
    }
    return clf;
}

// Fold index per sample. Stratified over group labels, grouped by subject:
// per class, groups are seed-shuffled and dealt round-robin, so per-fold
// group counts deviate from perfect balance by at most one.
inline std::vector<int> stratified_group_kfold(const std::vector<int>& y,
                                               const std::vector<std::string>& groups, int k,
                                               uint64_t seed) {
    if (k < 2) throw InvalidArgument("kfold: k must be at least 2");
    if (y.empty() || y.size() != groups.size()) throw InvalidArgument("kfold: bad inputs");

    std::map<std::string, int> group_label;
    for (size_t i = 0; i < y.size(); ++i) {
        auto [it, inserted] = group_label.emplace(groups[i], y[i]);
        if (!inserted && it->second != y[i])
            throw InvalidArgument("kfold: group " + groups[i] + " has mixed labels");
    }

    std::vector<std::string> class_groups[2];
    for (const auto& [gid, label] : group_label) class_groups[label].push_back(gid);
    for (int c = 0; c < 2; ++c)
        if (class_groups[c].size() < static_cast<size_t>(k))
            throw InvalidArgument("kfold: class " + std::to_string(c) + " has fewer groups than folds");

    auto rng = make_rng(seed, "kfold");
    std::map<std::string, int> fold_of;
    for (int c = 0; c < 2; ++c) {
        std::shuffle(class_groups[c].begin(), class_groups[c].end(), rng);
        for (size_t i = 0; i < class_groups[c].size(); ++i)
            fold_of[class_groups[c][i]] = static_cast<int>(i % static_cast<size_t>(k));
    }

    std::vector<int> folds(y.size());
    for (size_t i = 0; i < y.size(); ++i) folds[i] = fold_of[groups[i]];
    return folds;
}

struct CvResult {
    HyperParams params;
    std::vector<double> fold_accuracies;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population form over the k folds
};

struct GridSearchResult {
    std::vector<CvResult> results;  // grid order
    size_t best_index = 0;
    Classifier best_model;          // winner refit on the full training set
};

inline GridSearchResult grid_search_cv(const Dataset& data, const std::vector<HyperParams>& grid,
                                       int k, uint64_t seed,
                                       const std::vector<std::string>& feature_names = {}) {
    if (grid.empty()) throw InvalidArgument("grid_search_cv: empty grid");
    validate_dataset(data);
    const auto folds = stratified_group_kfold(data.y, data.groups, k, seed);

    GridSearchResult out;
    for (const auto& hp : grid) {
        CvResult cv;
        cv.params = hp;
        for (int f = 0; f < k; ++f) {
            Dataset train, val;
            for (size_t i = 0; i < data.size(); ++i) {
                auto& part = folds[i] == f ? val : train;
                part.X.push_back(data.X[i]);
                part.y.push_back(data.y[i]);
                part.groups.push_back(data.groups[i]);
            }
            const auto clf = train_classifier(train, hp);
            const auto pred = clf.predict(val.X);
            cv.fold_accuracies.push_back(compute_metrics(val.y, pred).accuracy);
        }
        double mean = 0.0;
        for (double a : cv.fold_accuracies) mean += a;
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (double a : cv.fold_accuracies) var += (a - mean) * (a - mean);
        cv.mean_accuracy = mean;
        cv.std_accuracy = std::sqrt(var / static_cast<double>(k));
        out.results.push_back(std::move(cv));
    }

    // max mean accuracy; ties fall to lower std, then earlier grid position
    out.best_index = 0;
    for (size_t i = 1; i < out.results.size(); ++i) {
        const auto& a = out.results[i];
        const auto& b = out.results[out.best_index];
        if (a.mean_accuracy > b.mean_accuracy ||
            (a.mean_accuracy == b.mean_accuracy && a.std_accuracy < b.std_accuracy))
            out.best_index = i;
    }
    out.best_model = train_classifier(data, grid[out.best_index], feature_names);
    return out;
}

// Search grids per family; gamma = 1/d is resolved here so the grid is
// fully explicit.
inline std::vector<HyperParams> default_grid(ModelFamily family, size_t n_features) {
    std::vector<HyperParams> grid;
    switch (family) {
        case ModelFamily::logistic:
            for (double l2 : {0.001, 0.01, 0.1, 1.0}) {
                HyperParams hp;
                hp.family = ModelFamily::logistic;
                hp.l2 = l2;
                grid.push_back(hp);
            }
            break;
        case ModelFamily::svm:
            for (double C : {0.1, 1.0, 10.0, 100.0}) {
                HyperParams hp;
                hp.family = ModelFamily::svm;
                hp.kernel = SvmKernel::linear;
                hp.C = C;
                grid.push_back(hp);
                for (double gamma : {0.001, 0.01, 0.1, 1.0 / static_cast<double>(n_features)}) {
                    hp.kernel = SvmKernel::rbf;
                    hp.gamma = gamma;
                    grid.push_back(hp);
                }
            }
            break;
        case ModelFamily::gbt:
            for (int rounds : {50, 100})
                for (int depth : {2, 3})
                    for (double lr : {0.1, 0.3}) {
                        HyperParams hp;
                        hp.family = ModelFamily::gbt;
                        hp.gbt.n_rounds = rounds;
                        hp.gbt.max_depth = depth;
                        hp.gbt.learning_rate = lr;
                        hp.gbt.lambda = 1.0;
                        hp.gbt.gamma = 0.0;
                        grid.push_back(hp);
                    }
            break;
    }
    return grid;
}

}  // namespace coughlab::ml
