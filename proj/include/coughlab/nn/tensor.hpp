// Minimal dense NHWC tensor shared by all network layers.
#pragma once

#include <string>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::nn {

template <typename T>
struct Tensor4 {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<T> data;

    Tensor4() = default;
    Tensor4(int n_, int h_, int w_, int c_)
        : n(n_), h(h_), w(w_), c(c_),
          data(static_cast<size_t>(n_) * h_ * w_ * c_, T(0)) {}

    size_t size() const { return data.size(); }

    T& at(int i, int y, int x, int ch) {
        return data[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
    }
    T at(int i, int y, int x, int ch) const {
        return data[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
    }

    bool same_shape(const Tensor4& o) const { return n == o.n && h == o.h && w == o.w && c == o.c; }

    std::string shape_str() const {
        char buf[64];
        std::snprintf(buf, sizeof buf, "(%d,%d,%d,%d)", n, h, w, c);
        return buf;
    }
};

// Parameter tensor paired with its gradient accumulator; Adam walks these.
template <typename T>
struct ParamView {
    std::vector<T>* values = nullptr;
    std::vector<T>* grads = nullptr;
};

}  // namespace coughlab::nn
