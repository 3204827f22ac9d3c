// Sequential network container, Adam, BCE training loop with early stopping,
// and float32 checkpoint serialization.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/nn/layers.hpp"
#include "coughlab/nn/tensor.hpp"

namespace coughlab::nn {

template <typename T>
class Network {
public:
    Layer<T>* add(std::unique_ptr<Layer<T>> layer) {
        layers_.push_back(std::move(layer));
        return layers_.back().get();
    }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) {
        Tensor4<T> cur = x;
        for (auto& layer : layers_) {
            cur = layer->forward(cur, training);
            for (const T v : cur.data)
                if (!std::isfinite(static_cast<double>(v)))
                    throw TrainingError("non-finite activation after layer " + layer->name());
        }
        return cur;
    }

    // Expects the gradient with respect to the final layer's output (or its
    // pre-activation for a sigmoid head, see Dense).
    void backward(const Tensor4<T>& grad) {
        Tensor4<T> cur = grad;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    }

    std::vector<ParamView<T>> params() {
        std::vector<ParamView<T>> out;
        for (auto& layer : layers_)
            for (auto p : layer->params()) out.push_back(p);
        return out;
    }

    void zero_grads() {
        for (auto p : params()) std::fill(p.grads->begin(), p.grads->end(), T(0));
    }

    size_t param_count() {
        size_t n = 0;
        for (auto p : params()) n += p.values->size();
        return n;
    }

    const std::vector<std::unique_ptr<Layer<T>>>& layers() const { return layers_; }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// Conv(32) -> pool -> Conv(128) -> pool -> Conv(128) -> pool -> Conv(128)
// -> pool -> flatten -> dropout(0.25) -> Dense(1024) -> Dense(1, sigmoid).
// All convolutions are 3x3, valid padding, stride 1, ReLU. For 224x224x3
// input the flattened width is 12*12*128 = 18432.
template <typename T>
Network<T> make_cough_cnn(uint64_t seed) {
    Network<T> net;
    auto rng_for = [&](const std::string& name) { return make_rng(seed, "init:" + name); };
    auto conv = [&](const std::string& name, int cin, int cout) {
        auto rng = rng_for(name);
        net.add(std::make_unique<Conv2D<T>>(name, cin, cout, 3, Activation::relu, rng));
    };
    conv("conv1", 3, 32);
    net.add(std::make_unique<MaxPool2<T>>("pool1"));
    conv("conv2", 32, 128);
    net.add(std::make_unique<MaxPool2<T>>("pool2"));
    conv("conv3", 128, 128);
    net.add(std::make_unique<MaxPool2<T>>("pool3"));
    conv("conv4", 128, 128);
    net.add(std::make_unique<MaxPool2<T>>("pool4"));
    net.add(std::make_unique<Flatten<T>>("flatten"));
    net.add(std::make_unique<Dropout<T>>("dropout", 0.25, stage_seed(seed, "dropout:dropout")));
    {
        auto rng = rng_for("dense1");
        net.add(std::make_unique<Dense<T>>("dense1", 12 * 12 * 128, 1024, Activation::relu, rng));
    }
    {
        auto rng = rng_for("dense2");
        net.add(std::make_unique<Dense<T>>("dense2", 1024, 1, Activation::sigmoid, rng));
    }
    return net;
}

template <typename T>
class Adam {
public:
    explicit Adam(double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<ParamView<T>>& params) {
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.values->size(), 0.0);
                v_.emplace_back(p.values->size(), 0.0);
            }
        }
        if (m_.size() != params.size()) throw TrainingError("adam: parameter set changed");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (size_t k = 0; k < params.size(); ++k) {
            auto& values = *params[k].values;
            auto& grads = *params[k].grads;
            if (values.size() != m_[k].size()) throw TrainingError("adam: parameter size changed");
            for (size_t i = 0; i < values.size(); ++i) {
                const double g = static_cast<double>(grads[i]);
                if (!std::isfinite(g)) throw TrainingError("adam: non-finite gradient");
                m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
                v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
                const double mhat = m_[k][i] / c1;
                const double vhat = v_[k][i] / c2;
                values[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    int64_t steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

// Mean binary cross-entropy; probabilities clamped to [1e-7, 1 - 1e-7].
template <typename T>
double bce_loss(const std::vector<T>& probs, const std::vector<int>& labels) {
    if (probs.size() != labels.size() || probs.empty())
        throw InvalidArgument("bce_loss: size mismatch or empty input");
    double total = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(static_cast<double>(probs[i]), 1e-7, 1.0 - 1e-7);
        total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(probs.size());
}

struct TrainParams {
    int max_epochs = 200;
    int batch_size = 16;
    int patience = 15;
    double learning_rate = 0.001;
    uint64_t seed = 0;
    bool verbose = false;
};

struct TrainHistory {
    std::vector<double> train_loss, val_loss, train_acc, val_acc;
    int best_epoch = 0;  // 1-based epoch with the lowest validation loss
    double best_val_loss = std::numeric_limits<double>::infinity();
    int epochs_run = 0;
};

namespace net_detail {

template <typename T>
Tensor4<T> take_rows(const Tensor4<T>& X, const std::vector<int>& order, int lo, int hi) {
    Tensor4<T> out(hi - lo, X.h, X.w, X.c);
    const size_t stride = static_cast<size_t>(X.h) * X.w * X.c;
    for (int i = lo; i < hi; ++i)
        std::copy_n(X.data.begin() + order[i] * stride, stride,
                    out.data.begin() + static_cast<size_t>(i - lo) * stride);
    return out;
}

template <typename T>
std::vector<std::vector<T>> snapshot_params(Network<T>& net) {
    std::vector<std::vector<T>> snap;
    for (auto p : net.params()) snap.push_back(*p.values);
    return snap;
}

template <typename T>
void restore_params(Network<T>& net, const std::vector<std::vector<T>>& snap) {
    auto params = net.params();
    if (params.size() != snap.size()) throw TrainingError("restore: parameter set changed");
    for (size_t i = 0; i < params.size(); ++i) *params[i].values = snap[i];
}

}  // namespace net_detail

// Runs the network over X in evaluation mode; returns {bce, accuracy}.
template <typename T>
std::pair<double, double> evaluate_network(Network<T>& net, const Tensor4<T>& X,
                                           const std::vector<int>& y, int batch_size = 16) {
    if (X.n != static_cast<int>(y.size()) || X.n == 0)
        throw InvalidArgument("evaluate_network: size mismatch or empty input");
    std::vector<int> order(X.n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<T> probs;
    probs.reserve(X.n);
    for (int lo = 0; lo < X.n; lo += batch_size) {
        const int hi = std::min(X.n, lo + batch_size);
        Tensor4<T> batch = net_detail::take_rows(X, order, lo, hi);
        Tensor4<T> out = net.forward(batch, false);
        for (int i = 0; i < out.n; ++i) probs.push_back(out.data[i]);
    }
    int correct = 0;
    for (int i = 0; i < X.n; ++i)
        if ((probs[i] >= T(0.5) ? 1 : 0) == y[i]) ++correct;
    return {bce_loss(probs, y), static_cast<double>(correct) / X.n};
}

// Adam + BCE with per-epoch shuffling and early stopping: training halts once
// validation loss has not strictly improved for `patience` epochs, and the
// weights from the best epoch are restored.
template <typename T>
TrainHistory train_network(Network<T>& net, const Tensor4<T>& X, const std::vector<int>& y,
                           const Tensor4<T>& Xval, const std::vector<int>& yval,
                           const TrainParams& params) {
    if (X.n != static_cast<int>(y.size()) || X.n == 0)
        throw InvalidArgument("train_network: training set size mismatch or empty");
    if (Xval.n != static_cast<int>(yval.size()) || Xval.n == 0)
        throw InvalidArgument("train_network: validation set size mismatch or empty");
    for (int label : y)
        if (label != 0 && label != 1) throw InvalidArgument("train_network: labels must be 0 or 1");
    auto* head = dynamic_cast<Dense<T>*>(net.layers().back().get());
    if (head == nullptr || head->activation() != Activation::sigmoid)
        throw InvalidArgument("train_network: output layer must be a sigmoid dense layer");

    Adam<T> opt(params.learning_rate);
    auto rng = make_rng(params.seed, "train:shuffle");
    std::vector<int> order(X.n);
    std::iota(order.begin(), order.end(), 0);

    TrainHistory hist;
    std::vector<std::vector<T>> best;
    for (int epoch = 1; epoch <= params.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int correct = 0;
        for (int lo = 0; lo < X.n; lo += params.batch_size) {
            const int hi = std::min(X.n, lo + params.batch_size);
            const int b = hi - lo;
            Tensor4<T> batch = net_detail::take_rows(X, order, lo, hi);
            std::vector<int> labels(b);
            for (int i = 0; i < b; ++i) labels[i] = y[order[lo + i]];

            Tensor4<T> out = net.forward(batch, true);
            std::vector<T> probs(out.data.begin(), out.data.begin() + b);
            loss_sum += bce_loss(probs, labels) * b;
            for (int i = 0; i < b; ++i)
                if ((probs[i] >= T(0.5) ? 1 : 0) == labels[i]) ++correct;

            // Sigmoid + BCE: gradient at the head's pre-activation is (p - y) / B.
            Tensor4<T> grad(b, 1, 1, 1);
            for (int i = 0; i < b; ++i)
                grad.data[i] = (probs[i] - static_cast<T>(labels[i])) / static_cast<T>(b);
            net.zero_grads();
            net.backward(grad);
            opt.step(net.params());
        }
        hist.train_loss.push_back(loss_sum / X.n);
        hist.train_acc.push_back(static_cast<double>(correct) / X.n);

        auto [vloss, vacc] = evaluate_network(net, Xval, yval, params.batch_size);
        hist.val_loss.push_back(vloss);
        hist.val_acc.push_back(vacc);
        hist.epochs_run = epoch;
        if (params.verbose)
            std::fprintf(stderr, "epoch %3d  train_loss %.4f  val_loss %.4f  val_acc %.3f\n", epoch,
                         hist.train_loss.back(), vloss, vacc);

        if (vloss < hist.best_val_loss) {
            hist.best_val_loss = vloss;
            hist.best_epoch = epoch;
            best = net_detail::snapshot_params(net);
        } else if (epoch - hist.best_epoch >= params.patience) {
            break;
        }
    }
    if (!best.empty()) net_detail::restore_params(net, best);
    return hist;
}

// Checkpoint format: a text manifest ("coughlab-cnn 1", one "layer <name>
// <count>" line per parameterized layer, "end"), then raw little-endian
// float32 values in parameter order.
static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

template <typename T>
void save_checkpoint(Network<T>& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << "coughlab-cnn 1\n";
    for (auto& layer : net.layers()) {
        size_t count = 0;
        for (auto p : layer->params()) count += p.values->size();
        if (count > 0) out << "layer " << layer->name() << " " << count << "\n";
    }
    out << "end\n";
    for (auto& layer : net.layers())
        for (auto p : layer->params())
            for (const T v : *p.values) {
                const float f = static_cast<float>(v);
                out.write(reinterpret_cast<const char*>(&f), sizeof(float));
            }
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

template <typename T>
void load_checkpoint(Network<T>& net, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "coughlab-cnn 1")
        throw FormatError("not a coughlab-cnn checkpoint: " + path);

    std::vector<std::pair<std::string, size_t>> manifest;
    while (std::getline(in, line)) {
        if (line == "end") break;
        std::istringstream ls(line);
        std::string tag, name;
        size_t count = 0;
        if (!(ls >> tag >> name >> count) || tag != "layer")
            throw FormatError("malformed checkpoint manifest line: " + line);
        manifest.emplace_back(name, count);
    }
    if (line != "end") throw FormatError("checkpoint manifest missing end marker: " + path);

    size_t mi = 0;
    for (auto& layer : net.layers()) {
        size_t count = 0;
        for (auto p : layer->params()) count += p.values->size();
        if (count == 0) continue;
        if (mi >= manifest.size() || manifest[mi].first != layer->name() ||
            manifest[mi].second != count)
            throw FormatError("checkpoint does not match network architecture at layer " +
                              layer->name());
        ++mi;
    }
    if (mi != manifest.size()) throw FormatError("checkpoint has extra layers: " + path);

    for (auto& layer : net.layers())
        for (auto p : layer->params())
            for (T& v : *p.values) {
                float f = 0.0f;
                in.read(reinterpret_cast<char*>(&f), sizeof(float));
                if (!in) throw FormatError("checkpoint truncated: " + path);
                v = static_cast<T>(f);
            }
    char extra = 0;
    if (in.read(&extra, 1)) throw FormatError("checkpoint has trailing data: " + path);
}

struct HistoryCsv {
    static void write(const TrainHistory& hist, const std::string& path) {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open history file for writing: " + path);
        out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
        char buf[160];
        for (size_t i = 0; i < hist.train_loss.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", i + 1,
                          hist.train_loss[i], hist.val_loss[i], hist.train_acc[i],
                          hist.val_acc[i]);
            out << buf;
        }
        if (!out) throw IoError("failed writing history file: " + path);
    }
};

}  // namespace coughlab::nn
