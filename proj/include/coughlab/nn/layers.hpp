// Network layers: valid-padding convolution (im2col + GEMM), 2x2 max pool,
// flatten, inverted dropout, dense. Templated on the scalar so training runs
// in float while gradient checks run in double.
#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coughlab/common.hpp"
#include "coughlab/nn/tensor.hpp"

namespace coughlab::nn {

enum class Activation { none, relu, sigmoid };

template <typename T>
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const { return name_; }
    virtual std::string kind() const = 0;
    virtual Tensor4<T> forward(const Tensor4<T>& x, bool training) = 0;
    virtual Tensor4<T> backward(const Tensor4<T>& grad_out) = 0;
    virtual std::vector<ParamView<T>> params() { return {}; }

protected:
    [[noreturn]] void shape_error(const Tensor4<T>& x, const std::string& expected) const {
        throw InvalidArgument(name_ + ": expected input " + expected + ", got " + x.shape_str());
    }

    std::string name_;
};

namespace layer_detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
inline T relu_of(T v) {
    return v > T(0) ? v : T(0);
}

template <typename T>
inline T sigmoid_of(T v) {
    return T(1) / (T(1) + std::exp(-v));
}

}  // namespace layer_detail

// Valid padding, stride 1. Weight layout [kh][kw][c_in][c_out] matches the
// im2col column order, so both passes are plain GEMMs.
template <typename T>
class Conv2D final : public Layer<T> {
public:
    Conv2D(std::string name, int c_in, int c_out, int k, Activation act, std::mt19937_64& rng)
        : Layer<T>(std::move(name)), c_in_(c_in), c_out_(c_out), k_(k), act_(act) {
        if (c_in <= 0 || c_out <= 0 || k <= 0) throw InvalidArgument(this->name_ + ": bad dimensions");
        const size_t fan_in = static_cast<size_t>(k) * k * c_in;
        weights_.resize(fan_in * c_out);
        bias_.assign(c_out, T(0));
        // He-uniform for the ReLU body
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : weights_) v = static_cast<T>(dist(rng));
        weight_grads_.assign(weights_.size(), T(0));
        bias_grads_.assign(bias_.size(), T(0));
    }

    std::string kind() const override { return "conv2d"; }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) override {
        (void)training;
        if (x.c != c_in_ || x.h < k_ || x.w < k_)
            this->shape_error(x, "(*,>=" + std::to_string(k_) + ",>=" + std::to_string(k_) + "," +
                                     std::to_string(c_in_) + ")");
        input_ = x;
        const int oh = x.h - k_ + 1, ow = x.w - k_ + 1;
        Tensor4<T> out(x.n, oh, ow, c_out_);

        const int patch = k_ * k_ * c_in_;
        const int positions = oh * ow;
        std::vector<T> col(static_cast<size_t>(positions) * patch);
        Eigen::Map<layer_detail::MatRM<T>> wmap(weights_.data(), patch, c_out_);
        for (int i = 0; i < x.n; ++i) {
            fill_col(x, i, col, oh, ow);
            Eigen::Map<layer_detail::MatRM<T>> colmap(col.data(), positions, patch);
            Eigen::Map<layer_detail::MatRM<T>> outmap(out.data.data() +
                                                          static_cast<size_t>(i) * positions * c_out_,
                                                      positions, c_out_);
            outmap.noalias() = colmap * wmap;
            outmap.rowwise() +=
                Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.data(), c_out_);
        }
        if (act_ == Activation::relu)
            for (auto& v : out.data) v = layer_detail::relu_of(v);
        else if (act_ == Activation::sigmoid)
            for (auto& v : out.data) v = layer_detail::sigmoid_of(v);
        output_ = out;
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override {
        if (!grad_out.same_shape(output_))
            throw InvalidArgument(this->name_ + ": gradient shape " + grad_out.shape_str() +
                                  " does not match output " + output_.shape_str());
        Tensor4<T> dz = grad_out;
        if (act_ == Activation::relu) {
            for (size_t i = 0; i < dz.data.size(); ++i)
                if (output_.data[i] <= T(0)) dz.data[i] = T(0);
        } else if (act_ == Activation::sigmoid) {
            for (size_t i = 0; i < dz.data.size(); ++i)
                dz.data[i] *= output_.data[i] * (T(1) - output_.data[i]);
        }

        const int oh = output_.h, ow = output_.w;
        const int patch = k_ * k_ * c_in_;
        const int positions = oh * ow;
        Tensor4<T> dx(input_.n, input_.h, input_.w, input_.c);
        std::vector<T> col(static_cast<size_t>(positions) * patch);
        std::vector<T> dcol(col.size());
        Eigen::Map<layer_detail::MatRM<T>> wmap(weights_.data(), patch, c_out_);
        Eigen::Map<layer_detail::MatRM<T>> dwmap(weight_grads_.data(), patch, c_out_);
        for (int i = 0; i < input_.n; ++i) {
            fill_col(input_, i, col, oh, ow);
            Eigen::Map<layer_detail::MatRM<T>> colmap(col.data(), positions, patch);
            Eigen::Map<layer_detail::MatRM<T>> dzmap(dz.data.data() +
                                                         static_cast<size_t>(i) * positions * c_out_,
                                                     positions, c_out_);
            dwmap.noalias() += colmap.transpose() * dzmap;
            for (int co = 0; co < c_out_; ++co) bias_grads_[co] += dzmap.col(co).sum();

            Eigen::Map<layer_detail::MatRM<T>> dcolmap(dcol.data(), positions, patch);
            dcolmap.noalias() = dzmap * wmap.transpose();
            // col2im scatter
            size_t q = 0;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    for (int ky = 0; ky < k_; ++ky)
                        for (int kx = 0; kx < k_; ++kx)
                            for (int ci = 0; ci < c_in_; ++ci)
                                dx.at(i, oy + ky, ox + kx, ci) += dcol[q++];
        }
        return dx;
    }

    std::vector<ParamView<T>> params() override {
        return {{&weights_, &weight_grads_}, {&bias_, &bias_grads_}};
    }

private:
    void fill_col(const Tensor4<T>& x, int image, std::vector<T>& col, int oh, int ow) const {
        size_t q = 0;
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox)
                for (int ky = 0; ky < k_; ++ky) {
                    const T* row = &x.data[((static_cast<size_t>(image) * x.h + oy + ky) * x.w + ox) *
                                           x.c];
                    for (int t = 0; t < k_ * x.c; ++t) col[q++] = row[t];
                }
    }

    int c_in_, c_out_, k_;
    Activation act_;
    std::vector<T> weights_, bias_, weight_grads_, bias_grads_;
    Tensor4<T> input_, output_;
};

// 2x2 window, stride 2; odd trailing rows and columns are dropped.
template <typename T>
class MaxPool2 final : public Layer<T> {
public:
    explicit MaxPool2(std::string name) : Layer<T>(std::move(name)) {}

    std::string kind() const override { return "maxpool2"; }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) override {
        (void)training;
        if (x.h < 2 || x.w < 2) this->shape_error(x, "(*,>=2,>=2,*)");
        in_shape_ = {x.n, x.h, x.w, x.c};
        const int oh = x.h / 2, ow = x.w / 2;
        Tensor4<T> out(x.n, oh, ow, x.c);
        argmax_.assign(out.size(), 0);
        size_t o = 0;
        for (int i = 0; i < x.n; ++i)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    for (int ch = 0; ch < x.c; ++ch, ++o) {
                        T best = x.at(i, 2 * oy, 2 * ox, ch);
                        size_t best_at = ((static_cast<size_t>(i) * x.h + 2 * oy) * x.w + 2 * ox) * x.c + ch;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx_ = 0; dx_ < 2; ++dx_) {
                                const T v = x.at(i, 2 * oy + dy, 2 * ox + dx_, ch);
                                if (v > best) {
                                    best = v;
                                    best_at = ((static_cast<size_t>(i) * x.h + 2 * oy + dy) * x.w +
                                               2 * ox + dx_) *
                                                  x.c +
                                              ch;
                                }
                            }
                        out.data[o] = best;
                        argmax_[o] = best_at;
                    }
        out_shape_ = {out.n, out.h, out.w, out.c};
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override {
        if (grad_out.n != out_shape_[0] || grad_out.h != out_shape_[1] ||
            grad_out.w != out_shape_[2] || grad_out.c != out_shape_[3])
            throw InvalidArgument(this->name_ + ": gradient shape mismatch");
        Tensor4<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        for (size_t o = 0; o < grad_out.data.size(); ++o) dx.data[argmax_[o]] += grad_out.data[o];
        return dx;
    }

private:
    std::array<int, 4> in_shape_{}, out_shape_{};
    std::vector<size_t> argmax_;
};

template <typename T>
class Flatten final : public Layer<T> {
public:
    explicit Flatten(std::string name) : Layer<T>(std::move(name)) {}

    std::string kind() const override { return "flatten"; }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) override {
        (void)training;
        in_shape_ = {x.n, x.h, x.w, x.c};
        Tensor4<T> out(x.n, 1, 1, x.h * x.w * x.c);
        out.data = x.data;
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override {
        Tensor4<T> dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        if (grad_out.data.size() != dx.data.size())
            throw InvalidArgument(this->name_ + ": gradient size mismatch");
        dx.data = grad_out.data;
        return dx;
    }

private:
    std::array<int, 4> in_shape_{};
};

// Inverted dropout: activations scaled by 1/keep during training so
// evaluation needs no rescaling.
template <typename T>
class Dropout final : public Layer<T> {
public:
    Dropout(std::string name, double rate, uint64_t seed)
        : Layer<T>(std::move(name)), rate_(rate), rng_(seed) {
        if (rate < 0.0 || rate >= 1.0) throw InvalidArgument(this->name_ + ": rate outside [0,1)");
    }

    std::string kind() const override { return "dropout"; }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) override {
        last_training_ = training;
        if (!training || rate_ == 0.0) return x;
        const T keep = static_cast<T>(1.0 - rate_);
        mask_.assign(x.size(), T(0));
        std::bernoulli_distribution coin(1.0 - rate_);
        Tensor4<T> out = x;
        for (size_t i = 0; i < out.data.size(); ++i) {
            if (coin(rng_)) {
                mask_[i] = T(1) / keep;
                out.data[i] *= mask_[i];
            } else {
                out.data[i] = T(0);
            }
        }
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override {
        if (!last_training_ || rate_ == 0.0) return grad_out;
        if (grad_out.data.size() != mask_.size())
            throw InvalidArgument(this->name_ + ": gradient size mismatch");
        Tensor4<T> dx = grad_out;
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= mask_[i];
        return dx;
    }

private:
    double rate_;
    std::mt19937_64 rng_;
    std::vector<T> mask_;
    bool last_training_ = false;
};

// Operates on flattened tensors (n,1,1,in). For the sigmoid output layer the
// upstream gradient is taken with respect to the pre-activation, which lets
// the loss fold sigmoid' into a numerically stable p - y term.
template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::string name, int in, int out, Activation act, std::mt19937_64& rng)
        : Layer<T>(std::move(name)), in_(in), out_(out), act_(act) {
        if (in <= 0 || out <= 0) throw InvalidArgument(this->name_ + ": bad dimensions");
        weights_.resize(static_cast<size_t>(in) * out);
        bias_.assign(out, T(0));
        // He-uniform for ReLU, Glorot-uniform for the sigmoid head
        const double limit = act == Activation::sigmoid
                                 ? std::sqrt(6.0 / static_cast<double>(in + out))
                                 : std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (auto& v : weights_) v = static_cast<T>(dist(rng));
        weight_grads_.assign(weights_.size(), T(0));
        bias_grads_.assign(bias_.size(), T(0));
    }

    std::string kind() const override { return "dense"; }

    Tensor4<T> forward(const Tensor4<T>& x, bool training) override {
        (void)training;
        if (x.h != 1 || x.w != 1 || x.c != in_)
            this->shape_error(x, "(*,1,1," + std::to_string(in_) + ")");
        input_ = x;
        Tensor4<T> out(x.n, 1, 1, out_);
        Eigen::Map<const layer_detail::MatRM<T>> xmap(x.data.data(), x.n, in_);
        Eigen::Map<layer_detail::MatRM<T>> wmap(weights_.data(), in_, out_);
        Eigen::Map<layer_detail::MatRM<T>> omap(out.data.data(), x.n, out_);
        omap.noalias() = xmap * wmap;
        omap.rowwise() += Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.data(), out_);
        if (act_ == Activation::relu)
            for (auto& v : out.data) v = layer_detail::relu_of(v);
        else if (act_ == Activation::sigmoid)
            for (auto& v : out.data) v = layer_detail::sigmoid_of(v);
        output_ = out;
        return out;
    }

    Tensor4<T> backward(const Tensor4<T>& grad_out) override {
        if (!grad_out.same_shape(output_))
            throw InvalidArgument(this->name_ + ": gradient shape mismatch");
        Tensor4<T> dz = grad_out;
        if (act_ == Activation::relu) {
            for (size_t i = 0; i < dz.data.size(); ++i)
                if (output_.data[i] <= T(0)) dz.data[i] = T(0);
        }
        // sigmoid: dz is already the pre-activation gradient (see class note)

        Eigen::Map<const layer_detail::MatRM<T>> xmap(input_.data.data(), input_.n, in_);
        Eigen::Map<layer_detail::MatRM<T>> dzmap(dz.data.data(), dz.n, out_);
        Eigen::Map<layer_detail::MatRM<T>> dwmap(weight_grads_.data(), in_, out_);
        dwmap.noalias() += xmap.transpose() * dzmap;
        for (int o = 0; o < out_; ++o) bias_grads_[o] += dzmap.col(o).sum();

        Tensor4<T> dx(input_.n, 1, 1, in_);
        Eigen::Map<layer_detail::MatRM<T>> dxmap(dx.data.data(), dx.n, in_);
        Eigen::Map<layer_detail::MatRM<T>> wmap(weights_.data(), in_, out_);
        dxmap.noalias() = dzmap * wmap.transpose();
        return dx;
    }

    std::vector<ParamView<T>> params() override {
        return {{&weights_, &weight_grads_}, {&bias_, &bias_grads_}};
    }

    Activation activation() const { return act_; }

private:
    int in_, out_;
    Activation act_;
    std::vector<T> weights_, bias_, weight_grads_, bias_grads_;
    Tensor4<T> input_, output_;
};

}  // namespace coughlab::nn
