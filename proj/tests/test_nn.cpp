#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "coughlab/nn/network.hpp"

using namespace coughlab;
using namespace coughlab::nn;
using Catch::Approx;

namespace {

template <typename T>
Tensor4<T> random_tensor(int n, int h, int w, int c, uint64_t seed, double lo = -1.0,
                         double hi = 1.0) {
    Tensor4<T> t(n, h, w, c);
    auto rng = make_rng(seed, "test:tensor");
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto& v : t.data) v = static_cast<T>(dist(rng));
    return t;
}

// 8x8x1 -> conv(1 filter) -> pool -> flatten(9) -> dense(4) -> dense(1).
// Small enough for finite differences, deep enough to cross every layer kind.
Network<double> tiny_net(uint64_t seed) {
    Network<double> net;
    auto rng1 = make_rng(seed, "init:c");
    net.add(std::make_unique<Conv2D<double>>("c", 1, 1, 3, Activation::relu, rng1));
    net.add(std::make_unique<MaxPool2<double>>("p"));
    net.add(std::make_unique<Flatten<double>>("f"));
    auto rng2 = make_rng(seed, "init:d1");
    net.add(std::make_unique<Dense<double>>("d1", 9, 4, Activation::relu, rng2));
    auto rng3 = make_rng(seed, "init:d2");
    net.add(std::make_unique<Dense<double>>("d2", 4, 1, Activation::sigmoid, rng3));
    return net;
}

double net_bce(Network<double>& net, const Tensor4<double>& x, const std::vector<int>& y) {
    Tensor4<double> out = net.forward(x, true);
    std::vector<double> probs(out.data.begin(), out.data.end());
    return bce_loss(probs, y);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("cough cnn layer-by-layer output shapes") {
    auto net = make_cough_cnn<float>(7);
    struct Want {
        const char* name;
        int h, w, c;
    };
    const Want want[] = {
        {"conv1", 222, 222, 32}, {"pool1", 111, 111, 32}, {"conv2", 109, 109, 128},
        {"pool2", 54, 54, 128},  {"conv3", 52, 52, 128},  {"pool3", 26, 26, 128},
        {"conv4", 24, 24, 128},  {"pool4", 12, 12, 128},  {"flatten", 1, 1, 18432},
        {"dropout", 1, 1, 18432}, {"dense1", 1, 1, 1024}, {"dense2", 1, 1, 1},
    };
    REQUIRE(net.layers().size() == 12);

    Tensor4<float> cur = random_tensor<float>(1, 224, 224, 3, 11);
    for (size_t i = 0; i < net.layers().size(); ++i) {
        cur = net.layers()[i]->forward(cur, false);
        INFO("layer " << want[i].name);
        CHECK(net.layers()[i]->name() == want[i].name);
        CHECK(cur.n == 1);
        CHECK(cur.h == want[i].h);
        CHECK(cur.w == want[i].w);
        CHECK(cur.c == want[i].c);
    }
    const float p = cur.data[0];
    CHECK(p > 0.0f);
    CHECK(p < 1.0f);
    CHECK(net.param_count() == 19209473);
}

TEST_CASE("fresh network starts near maximum uncertainty") {
    auto net = make_cough_cnn<float>(3);
    auto x = random_tensor<float>(1, 224, 224, 3, 5, 0.0, 1.0);
    const float p = net.forward(x, false).data[0];
    CHECK(p > 0.3f);
    CHECK(p < 0.7f);
}

TEST_CASE("convolution with all-ones kernel computes patch sums") {
    auto rng = make_rng(1, "init:conv");
    Conv2D<float> conv("conv", 1, 1, 3, Activation::none, rng);
    auto params = conv.params();
    for (auto& w : *params[0].values) w = 1.0f;
    (*params[1].values)[0] = 0.0f;

    Tensor4<float> x(1, 5, 5, 1);
    for (int i = 0; i < 25; ++i) x.data[i] = static_cast<float>(i);
    Tensor4<float> out = conv.forward(x, false);
    REQUIRE(out.h == 3);
    REQUIRE(out.w == 3);
    for (int oy = 0; oy < 3; ++oy)
        for (int ox = 0; ox < 3; ++ox) {
            float want = 0.0f;
            for (int dy = 0; dy < 3; ++dy)
                for (int dx = 0; dx < 3; ++dx) want += x.at(0, oy + dy, ox + dx, 0);
            CHECK(out.at(0, oy, ox, 0) == Approx(want));
        }
}

TEST_CASE("max pool keeps window maxima and floors odd sizes") {
    MaxPool2<float> pool("pool");
    Tensor4<float> x(1, 5, 5, 1);
    for (int i = 0; i < 25; ++i) x.data[i] = static_cast<float>(i);
    Tensor4<float> out = pool.forward(x, false);
    REQUIRE(out.h == 2);
    REQUIRE(out.w == 2);
    CHECK(out.at(0, 0, 0, 0) == 6.0f);
    CHECK(out.at(0, 0, 1, 0) == 8.0f);
    CHECK(out.at(0, 1, 0, 0) == 16.0f);
    CHECK(out.at(0, 1, 1, 0) == 18.0f);

    Tensor4<float> grad(1, 2, 2, 1);
    grad.data = {1.0f, 2.0f, 3.0f, 4.0f};
    Tensor4<float> dx = pool.backward(grad);
    CHECK(dx.at(0, 1, 1, 0) == 1.0f);
    CHECK(dx.at(0, 1, 3, 0) == 2.0f);
    CHECK(dx.at(0, 3, 1, 0) == 3.0f);
    CHECK(dx.at(0, 3, 3, 0) == 4.0f);
    float total = 0.0f;
    for (float v : dx.data) total += v;
    CHECK(total == Approx(10.0f));
}

TEST_CASE("forward passes are deterministic in evaluation mode") {
    auto net = make_cough_cnn<float>(19);
    auto x = random_tensor<float>(2, 224, 224, 3, 23, 0.0, 1.0);
    Tensor4<float> a = net.forward(x, false);
    Tensor4<float> b = net.forward(x, false);
    REQUIRE(a.data.size() == b.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("shape errors name the offending layer") {
    auto net = make_cough_cnn<float>(2);
    auto bad = random_tensor<float>(1, 224, 224, 2, 3);
    REQUIRE_THROWS_WITH(net.forward(bad, false),
                        Catch::Matchers::ContainsSubstring("conv1"));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto net = tiny_net(seed);
        auto x = random_tensor<double>(2, 8, 8, 1, seed + 100);
        const std::vector<int> y = {1, 0};

        Tensor4<double> out = net.forward(x, true);
        Tensor4<double> grad(2, 1, 1, 1);
        for (int i = 0; i < 2; ++i)
            grad.data[i] = (out.data[i] - static_cast<double>(y[i])) / 2.0;
        net.zero_grads();
        net.backward(grad);

        std::vector<double> analytic;
        for (auto p : net.params())
            analytic.insert(analytic.end(), p.grads->begin(), p.grads->end());

        const double eps = 1e-6;
        size_t flat = 0;
        double worst = 0.0;
        for (auto p : net.params())
            for (size_t i = 0; i < p.values->size(); ++i, ++flat) {
                const double orig = (*p.values)[i];
                (*p.values)[i] = orig + eps;
                const double lp = net_bce(net, x, y);
                (*p.values)[i] = orig - eps;
                const double lm = net_bce(net, x, y);
                (*p.values)[i] = orig;
                const double numeric = (lp - lm) / (2.0 * eps);
                const double rel = std::abs(analytic[flat] - numeric) /
                                   std::max(1e-9, std::abs(analytic[flat]) + std::abs(numeric));
                worst = std::max(worst, rel);
            }
        INFO("seed " << seed);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("zero upstream gradient leaves parameter gradients zero") {
    auto net = tiny_net(9);
    auto x = random_tensor<double>(1, 8, 8, 1, 42);
    net.forward(x, true);
    net.zero_grads();
    Tensor4<double> zero(1, 1, 1, 1);
    net.backward(zero);
    for (auto p : net.params())
        for (double g : *p.grads) CHECK(g == 0.0);
}

TEST_CASE("duplicated batch yields the same mean gradient") {
    auto net = tiny_net(13);
    auto x1 = random_tensor<double>(1, 8, 8, 1, 77);

    Tensor4<double> out1 = net.forward(x1, true);
    Tensor4<double> g1(1, 1, 1, 1);
    g1.data[0] = out1.data[0] - 1.0;
    net.zero_grads();
    net.backward(g1);
    std::vector<double> grads_single;
    for (auto p : net.params())
        grads_single.insert(grads_single.end(), p.grads->begin(), p.grads->end());

    Tensor4<double> x2(2, 8, 8, 1);
    std::copy(x1.data.begin(), x1.data.end(), x2.data.begin());
    std::copy(x1.data.begin(), x1.data.end(), x2.data.begin() + x1.data.size());
    Tensor4<double> out2 = net.forward(x2, true);
    Tensor4<double> g2(2, 1, 1, 1);
    for (int i = 0; i < 2; ++i) g2.data[i] = (out2.data[i] - 1.0) / 2.0;
    net.zero_grads();
    net.backward(g2);
    std::vector<double> grads_double;
    for (auto p : net.params())
        grads_double.insert(grads_double.end(), p.grads->begin(), p.grads->end());

    REQUIRE(grads_single.size() == grads_double.size());
    for (size_t i = 0; i < grads_single.size(); ++i)
        CHECK(grads_double[i] == Approx(grads_single[i]).margin(1e-12));
}

TEST_CASE("adam first step moves each weight by about the learning rate") {
    std::vector<double> w = {0.0, 5.0};
    std::vector<double> g = {0.3, -0.7};
    Adam<double> opt(0.001);
    opt.step({{&w, &g}});
    CHECK(w[0] == Approx(0.0 - 0.001).epsilon(1e-4));
    CHECK(w[1] == Approx(5.0 + 0.001).epsilon(1e-4));
}

TEST_CASE("adam ignores zero gradients and mirrors sign flips") {
    std::vector<double> w = {1.0};
    std::vector<double> g = {0.0};
    Adam<double> opt(0.001);
    opt.step({{&w, &g}});
    CHECK(w[0] == 1.0);

    std::vector<double> wp = {0.0}, gp = {0.25};
    std::vector<double> wn = {0.0}, gn = {-0.25};
    Adam<double> op(0.001), on(0.001);
    op.step({{&wp, &gp}});
    on.step({{&wn, &gn}});
    CHECK(wp[0] == Approx(-wn[0]));

    std::vector<double> bad = {std::numeric_limits<double>::quiet_NaN()};
    Adam<double> ob(0.001);
    CHECK_THROWS_AS(ob.step({{&w, &bad}}), TrainingError);
}

TEST_CASE("dropout keeps the activation expectation and masks gradients") {
    Dropout<float> drop("drop", 0.25, stage_seed(5, "dropout:drop"));
    Tensor4<float> ones(1, 1, 1, 10000);
    std::fill(ones.data.begin(), ones.data.end(), 1.0f);

    Tensor4<float> out = drop.forward(ones, true);
    double sum = 0.0;
    int zeros = 0;
    for (float v : out.data) {
        sum += v;
        if (v == 0.0f) ++zeros;
        else CHECK(v == Approx(1.0f / 0.75f));
    }
    CHECK(sum / 10000.0 == Approx(1.0).margin(0.02));
    CHECK(std::abs(zeros / 10000.0 - 0.25) < 0.02);

    // gradient flows exactly where the activation survived
    Tensor4<float> grad = ones;
    Tensor4<float> dx = drop.backward(grad);
    for (size_t i = 0; i < dx.data.size(); ++i) {
        if (out.data[i] == 0.0f) CHECK(dx.data[i] == 0.0f);
        else CHECK(dx.data[i] == Approx(1.0f / 0.75f));
    }

    Tensor4<float> eval_out = drop.forward(ones, false);
    for (float v : eval_out.data) CHECK(v == 1.0f);
    Tensor4<float> eval_dx = drop.backward(grad);
    for (float v : eval_dx.data) CHECK(v == 1.0f);
}

TEST_CASE("early stopping halts after patience epochs without improvement") {
    // lr = 0 freezes the weights, so validation loss improves only once, at
    // epoch 1; patience 15 must stop training after epoch 16.
    Network<float> net;
    auto rng = make_rng(3, "init:d");
    net.add(std::make_unique<Dense<float>>("d", 4, 1, Activation::sigmoid, rng));
    auto X = random_tensor<float>(8, 1, 1, 4, 31);
    auto Xv = random_tensor<float>(4, 1, 1, 4, 37);
    const std::vector<int> y = {0, 1, 0, 1, 0, 1, 0, 1}, yv = {0, 1, 0, 1};

    TrainParams params;
    params.learning_rate = 0.0;
    params.seed = 5;
    auto hist = train_network(net, X, y, Xv, yv, params);
    CHECK(hist.best_epoch == 1);
    CHECK(hist.epochs_run == 16);
    REQUIRE(hist.val_loss.size() == 16);
    for (double v : hist.val_loss) CHECK(v == Approx(hist.val_loss[0]));

    // patience beyond max_epochs: every epoch runs
    Network<float> net2;
    auto rng2 = make_rng(3, "init:d");
    net2.add(std::make_unique<Dense<float>>("d", 4, 1, Activation::sigmoid, rng2));
    params.max_epochs = 5;
    params.patience = 10;
    auto hist2 = train_network(net2, X, y, Xv, yv, params);
    CHECK(hist2.epochs_run == 5);
}

TEST_CASE("training restores the weights from the best validation epoch") {
    Network<float> net;
    auto rng = make_rng(11, "init:d");
    net.add(std::make_unique<Dense<float>>("d", 3, 1, Activation::sigmoid, rng));
    auto X = random_tensor<float>(12, 1, 1, 3, 41);
    auto Xv = random_tensor<float>(6, 1, 1, 3, 43);
    std::vector<int> y(12), yv(6);
    for (int i = 0; i < 12; ++i) y[i] = X.data[3 * i] > 0.0f ? 1 : 0;
    for (int i = 0; i < 6; ++i) yv[i] = Xv.data[3 * i] > 0.0f ? 1 : 0;

    TrainParams params;
    params.max_epochs = 40;
    params.learning_rate = 0.05;
    params.seed = 7;
    auto hist = train_network(net, X, y, Xv, yv, params);
    auto [vloss, vacc] = evaluate_network(net, Xv, yv);
    CHECK(vloss == Approx(hist.best_val_loss).epsilon(1e-5));
    const double min_seen = *std::min_element(hist.val_loss.begin(), hist.val_loss.end());
    CHECK(hist.best_val_loss == Approx(min_seen));
}

TEST_CASE("a small convnet fits linearly separable images") {
    // class 1: bright top half, class 0: bright bottom half, plus noise
    const int n = 40;
    Tensor4<float> X(n, 16, 16, 1);
    std::vector<int> y(n);
    auto rng = make_rng(17, "test:images");
    std::uniform_real_distribution<double> noise(0.0, 0.25);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2;
        for (int r = 0; r < 16; ++r)
            for (int c = 0; c < 16; ++c) {
                const bool bright = y[i] == 1 ? r < 8 : r >= 8;
                X.at(i, r, c, 0) = static_cast<float>((bright ? 0.75 : 0.0) + noise(rng));
            }
    }

    Network<float> net;
    auto r1 = make_rng(9, "init:c1");
    net.add(std::make_unique<Conv2D<float>>("c1", 1, 4, 3, Activation::relu, r1));
    net.add(std::make_unique<MaxPool2<float>>("p1"));
    auto r2 = make_rng(9, "init:c2");
    net.add(std::make_unique<Conv2D<float>>("c2", 4, 8, 3, Activation::relu, r2));
    net.add(std::make_unique<MaxPool2<float>>("p2"));
    net.add(std::make_unique<Flatten<float>>("f"));
    auto r3 = make_rng(9, "init:d1");
    net.add(std::make_unique<Dense<float>>("d1", 2 * 2 * 8, 16, Activation::relu, r3));
    auto r4 = make_rng(9, "init:d2");
    net.add(std::make_unique<Dense<float>>("d2", 16, 1, Activation::sigmoid, r4));

    TrainParams params;
    params.max_epochs = 50;
    params.seed = 21;
    auto hist = train_network(net, X, y, X, y, params);
    auto [loss, acc] = evaluate_network(net, X, y);
    CHECK(acc >= 0.95);
    CHECK(loss < bce_loss(std::vector<float>(n, 0.5f), y));
    CHECK(hist.epochs_run <= 50);
}

TEST_CASE("checkpoints round-trip exactly and reject mismatches") {
    auto net = tiny_net(29);
    auto x = random_tensor<double>(1, 8, 8, 1, 51);
    const double before = net.forward(x, false).data[0];

    const std::string path = temp_path("coughlab_ckpt_test.bin");
    save_checkpoint(net, path);
    for (auto p : net.params())
        for (auto& v : *p.values) v += 0.5;
    load_checkpoint(net, path);
    const double after = net.forward(x, false).data[0];
    // weights pass through float32, so agreement is to float precision
    CHECK(after == Approx(before).epsilon(1e-5));

    auto other = make_cough_cnn<double>(1);
    CHECK_THROWS_AS(load_checkpoint(other, path), FormatError);
    CHECK_THROWS_AS(load_checkpoint(net, temp_path("coughlab_no_such_ckpt.bin")), IoError);

    const std::string junk = temp_path("coughlab_junk_ckpt.bin");
    {
        std::ofstream out(junk, std::ios::binary);
        out << "RIFF not a checkpoint\n";
    }
    CHECK_THROWS_AS(load_checkpoint(net, junk), FormatError);
    std::filesystem::remove(path);
    std::filesystem::remove(junk);
}

TEST_CASE("history csv lists one row per epoch") {
    TrainHistory hist;
    hist.train_loss = {0.7, 0.5};
    hist.val_loss = {0.72, 0.55};
    hist.train_acc = {0.5, 0.75};
    hist.val_acc = {0.5, 0.7};
    const std::string path = temp_path("coughlab_history_test.csv");
    HistoryCsv::write(hist, path);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,train_loss,val_loss,train_acc,val_acc");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(path);
}

TEST_CASE("train_network validates its inputs") {
    Network<float> net;
    auto rng = make_rng(1, "init:d");
    net.add(std::make_unique<Dense<float>>("d", 2, 1, Activation::sigmoid, rng));
    auto X = random_tensor<float>(4, 1, 1, 2, 1);
    TrainParams params;
    CHECK_THROWS_AS(train_network(net, X, {0, 1}, X, {0, 1, 0, 1}, params), InvalidArgument);
    CHECK_THROWS_AS(train_network(net, X, {0, 1, 2, 1}, X, {0, 1, 0, 1}, params),
                    InvalidArgument);

    Network<float> relu_head;
    auto rng2 = make_rng(1, "init:d");
    relu_head.add(std::make_unique<Dense<float>>("d", 2, 1, Activation::relu, rng2));
    CHECK_THROWS_AS(train_network(relu_head, X, {0, 1, 0, 1}, X, {0, 1, 0, 1}, params),
                    InvalidArgument);
}
