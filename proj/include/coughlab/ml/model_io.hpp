// JSON persistence for fitted classifiers.
#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "coughlab/common.hpp"
#include "coughlab/ml/cv.hpp"

namespace coughlab::ml {

namespace model_io_detail {

using nlohmann::json;

inline json scaler_to_json(const StandardScaler& s) {
    return json{{"means", s.means}, {"stds", s.stds}};
}

inline StandardScaler scaler_from_json(const json& j) {
    StandardScaler s;
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    if (s.means.size() != s.stds.size()) throw FormatError("model file: scaler shape mismatch");
    return s;
}

inline json tree_to_json(const RegressionTree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes)
        nodes.push_back(json{{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"weight", n.weight}});
    return nodes;
}

inline RegressionTree tree_from_json(const json& j) {
    RegressionTree t;
    for (const auto& n : j) {
        TreeNode node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.weight = n.at("weight").get<double>();
        t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw FormatError("model file: empty tree");
    return t;
}

}  // namespace model_io_detail

inline void save_model(const std::string& path, const Classifier& clf) {
    using nlohmann::json;
    json j;
    j["format"] = "coughlab-model";
    j["version"] = 1;
    j["family"] = to_string(clf.params.family);
    j["feature_names"] = clf.feature_names;
    j["scaler"] = model_io_detail::scaler_to_json(clf.scaler);

    switch (clf.params.family) {
        case ModelFamily::logistic: {
            const auto& m = std::get<LogisticModel>(clf.model);
            j["params"] = json{{"l2", m.l2}};
            j["model"] = json{{"weights", m.weights}, {"bias", m.bias}};
            break;
        }
        case ModelFamily::svm: {
            const auto& m = std::get<SvmModel>(clf.model);
            j["params"] = json{{"kernel", m.kernel == SvmKernel::linear ? "linear" : "rbf"},
                               {"C", m.C},
                               {"gamma", m.gamma}};
            j["model"] = json{{"support_vectors", m.support_vectors},
                              {"dual_coefs", m.dual_coefs},
                              {"bias", m.bias}};
            break;
        }
        case ModelFamily::gbt: {
            const auto& m = std::get<GbtModel>(clf.model);
            j["params"] = json{{"n_rounds", m.params.n_rounds},
                               {"max_depth", m.params.max_depth},
                               {"learning_rate", m.params.learning_rate},
                               {"lambda", m.params.lambda},
                               {"gamma", m.params.gamma}};
            json trees = json::array();
            for (const auto& t : m.trees) trees.push_back(model_io_detail::tree_to_json(t));
            j["model"] = json{{"trees", trees}};
            break;
        }
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline Classifier load_model(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "coughlab-model")
            throw FormatError(path + ": not a model file");
        if (j.at("version").get<int>() != 1) throw FormatError(path + ": unsupported version");

        Classifier clf;
        clf.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        clf.scaler = model_io_detail::scaler_from_json(j.at("scaler"));

        const auto family = j.at("family").get<std::string>();
        if (family == "logistic") {
            clf.params.family = ModelFamily::logistic;
            clf.params.l2 = j.at("params").at("l2").get<double>();
            LogisticModel m;
            m.weights = j.at("model").at("weights").get<std::vector<double>>();
            m.bias = j.at("model").at("bias").get<double>();
            m.l2 = clf.params.l2;
            clf.model = std::move(m);
        } else if (family == "svm") {
            clf.params.family = ModelFamily::svm;
            const auto kernel = j.at("params").at("kernel").get<std::string>();
            SvmModel m;
            m.kernel = kernel == "linear" ? SvmKernel::linear : SvmKernel::rbf;
            if (kernel != "linear" && kernel != "rbf") throw FormatError(path + ": unknown kernel");
            m.C = j.at("params").at("C").get<double>();
            m.gamma = j.at("params").at("gamma").get<double>();
            m.support_vectors = j.at("model").at("support_vectors").get<std::vector<std::vector<double>>>();
            m.dual_coefs = j.at("model").at("dual_coefs").get<std::vector<double>>();
            m.bias = j.at("model").at("bias").get<double>();
            if (m.support_vectors.size() != m.dual_coefs.size())
                throw FormatError(path + ": support vector count mismatch");
            clf.params.kernel = m.kernel;
            clf.params.C = m.C;
            clf.params.gamma = m.gamma;
            clf.model = std::move(m);
        } else if (family == "gbt") {
            clf.params.family = ModelFamily::gbt;
            GbtModel m;
            m.params.n_rounds = j.at("params").at("n_rounds").get<int>();
            m.params.max_depth = j.at("params").at("max_depth").get<int>();
            m.params.learning_rate = j.at("params").at("learning_rate").get<double>();
            m.params.lambda = j.at("params").at("lambda").get<double>();
            m.params.gamma = j.at("params").at("gamma").get<double>();
            for (const auto& t : j.at("model").at("trees"))
                m.trees.push_back(model_io_detail::tree_from_json(t));
            clf.params.gbt = m.params;
            clf.model = std::move(m);
        } else {
            throw FormatError(path + ": unknown model family '" + family + "'");
        }
        return clf;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

}  // namespace coughlab::ml
