// FFT, windows and transforms backing the feature extractors.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab::dsp {

inline constexpr double kPi = std::numbers::pi;

inline bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_power_of_two(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT. Length must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
    const size_t n = a.size();
    if (!is_power_of_two(n)) throw InvalidArgument("fft: length must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

// One-sided magnitude-squared spectrum of a real frame (zero-padded to the
// next power of two if needed). Returns n_fft/2 + 1 bins.
inline std::vector<double> power_spectrum_frame(const std::vector<double>& frame, size_t n_fft) {
    if (!is_power_of_two(n_fft)) throw InvalidArgument("power_spectrum_frame: n_fft must be a power of two");
    std::vector<std::complex<double>> buf(n_fft, {0.0, 0.0});
    const size_t n = std::min(frame.size(), n_fft);
    for (size_t i = 0; i < n; ++i) buf[i] = frame[i];
    fft_inplace(buf);
    std::vector<double> out(n_fft / 2 + 1);
    for (size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
    return out;
}

// Periodic Hann window, the STFT-friendly variant.
inline std::vector<double> hann_window(size_t n) {
    std::vector<double> w(n);
    for (size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

// Orthonormal DCT-II of `x`, truncated to the first `n_out` coefficients.
inline std::vector<double> dct2_orthonormal(const std::vector<double>& x, size_t n_out) {
    const size_t n = x.size();
    if (n == 0) throw InvalidArgument("dct2: empty input");
    if (n_out > n) throw InvalidArgument("dct2: n_out exceeds input length");
    std::vector<double> out(n_out, 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double normk = std::sqrt(2.0 / static_cast<double>(n));
    for (size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(kPi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                   (2.0 * static_cast<double>(n)));
        out[k] = acc * (k == 0 ? norm0 : normk);
    }
    return out;
}

// Inverse of dct2_orthonormal when given all n coefficients.
inline std::vector<double> idct2_orthonormal(const std::vector<double>& c) {
    const size_t n = c.size();
    if (n == 0) throw InvalidArgument("idct2: empty input");
    std::vector<double> out(n, 0.0);
    const double norm0 = std::sqrt(1.0 / static_cast<double>(n));
    const double normk = std::sqrt(2.0 / static_cast<double>(n));
    for (size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (size_t k = 0; k < n; ++k) {
            double basis = std::cos(kPi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) /
                                    (2.0 * static_cast<double>(n)));
            acc += c[k] * (k == 0 ? norm0 : normk) * basis;
        }
        out[i] = acc;
    }
    return out;
}

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank evaluated at FFT bin centers, `n_fft/2 + 1` wide.
// Filters span [0, sample_rate/2]; weights are unnormalized triangles.
inline std::vector<std::vector<double>> mel_filterbank(size_t n_mels, size_t n_fft, double sample_rate_hz) {
    if (n_mels == 0) throw InvalidArgument("mel_filterbank: n_mels must be positive");
    const size_t n_bins = n_fft / 2 + 1;
    const double nyquist = sample_rate_hz / 2.0;
    const double mel_max = hz_to_mel(nyquist);
    std::vector<double> edges_hz(n_mels + 2);
    for (size_t i = 0; i < edges_hz.size(); ++i)
        edges_hz[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    std::vector<std::vector<double>> bank(n_mels, std::vector<double>(n_bins, 0.0));
    for (size_t m = 0; m < n_mels; ++m) {
        const double lo = edges_hz[m], mid = edges_hz[m + 1], hi = edges_hz[m + 2];
        for (size_t k = 0; k < n_bins; ++k) {
            double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
            if (f > lo && f < mid)
                bank[m][k] = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                bank[m][k] = (hi - f) / (hi - mid);
        }
    }
    return bank;
}

}  // namespace coughlab::dsp
