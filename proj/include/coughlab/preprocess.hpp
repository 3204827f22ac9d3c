// Recording conditioning: loudness normalization, low-pass filtering and
// downsampling to the analysis rate.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"
#include "coughlab/dsp.hpp"

namespace coughlab {

struct PreprocessParams {
    int target_rate_hz = 12000;
    double lowpass_cutoff_hz = 5800.0;
    int lowpass_order = 4;
    double target_peak = 0.9;
};

inline Waveform normalize_loudness(const Waveform& w, double target_peak = 0.9) {
    if (target_peak <= 0.0 || target_peak > 1.0)
        throw InvalidArgument("normalize_loudness: target_peak must be in (0,1]");
    double peak = 0.0;
    for (double x : w.samples) peak = std::max(peak, std::abs(x));
    if (peak == 0.0) throw DegenerateInput("normalize_loudness: silent audio");
    Waveform out;
    out.sample_rate_hz = w.sample_rate_hz;
    out.samples.resize(w.samples.size());
    const double gain = target_peak / peak;
    for (size_t i = 0; i < w.samples.size(); ++i) out.samples[i] = w.samples[i] * gain;
    return out;
}

namespace filter_detail {

struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Butterworth low-pass as a cascade of bilinear-transformed biquad sections.
inline std::vector<Biquad> butterworth_lowpass(double cutoff_hz, double sample_rate_hz, int order) {
    if (order <= 0 || order % 2 != 0) throw InvalidArgument("butterworth: order must be positive and even");
    const double k = std::tan(dsp::kPi * cutoff_hz / sample_rate_hz);
    std::vector<Biquad> sections;
    for (int s = 0; s < order / 2; ++s) {
        const double theta = dsp::kPi * (2.0 * s + 1.0) / (2.0 * order);
        const double q = 2.0 * std::sin(theta);
        const double den = k * k + q * k + 1.0;
        Biquad bq;
        bq.b0 = k * k / den;
        bq.b1 = 2.0 * bq.b0;
        bq.b2 = bq.b0;
        bq.a1 = 2.0 * (k * k - 1.0) / den;
        bq.a2 = (k * k - q * k + 1.0) / den;
        sections.push_back(bq);
    }
    return sections;
}

// Direct form II transposed, with the state primed for a step of height x0 so
// constant signals pass through exactly.
inline void run_biquad(const Biquad& q, std::vector<double>& x) {
    if (x.empty()) return;
    double z1 = (1.0 - q.b0) * x[0];
    double z2 = (q.b2 - q.a2) * x[0];
    for (double& v : x) {
        const double in = v;
        const double out = q.b0 * in + z1;
        z1 = q.b1 * in - q.a1 * out + z2;
        z2 = q.b2 * in - q.a2 * out;
        v = out;
    }
}

}  // namespace filter_detail

// Zero-phase low-pass: the Butterworth cascade applied forward then backward.
// The signal is extended by odd reflection at both ends to absorb edge
// transients, mirroring the usual filtfilt treatment.
inline Waveform lowpass_filter(const Waveform& w, double cutoff_hz, int order = 4) {
    const double nyquist = w.sample_rate_hz / 2.0;
    if (cutoff_hz <= 0.0 || cutoff_hz >= nyquist)
        throw InvalidArgument("lowpass_filter: cutoff must lie in (0, Nyquist)");
    auto sections = filter_detail::butterworth_lowpass(cutoff_hz, w.sample_rate_hz, order);

    const size_t n = w.samples.size();
    const size_t pad = std::min(n > 1 ? n - 1 : size_t{0}, size_t(3 * (2 * order + 1)));
    std::vector<double> x;
    x.reserve(n + 2 * pad);
    for (size_t i = 0; i < pad; ++i) x.push_back(2.0 * w.samples[0] - w.samples[pad - i]);
    x.insert(x.end(), w.samples.begin(), w.samples.end());
    for (size_t i = 0; i < pad; ++i) x.push_back(2.0 * w.samples[n - 1] - w.samples[n - 2 - i]);

    for (const auto& q : sections) filter_detail::run_biquad(q, x);
    std::reverse(x.begin(), x.end());
    for (const auto& q : sections) filter_detail::run_biquad(q, x);
    std::reverse(x.begin(), x.end());

    Waveform out;
    out.sample_rate_hz = w.sample_rate_hz;
    out.samples.assign(x.begin() + pad, x.begin() + pad + n);
    return out;
}

namespace resample_detail {

inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_sq = x * x / 4.0;
    for (int k = 1; k < 64; ++k) {
        term *= half_sq / (k * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

inline double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(dsp::kPi * x) / (dsp::kPi * x);
}

}  // namespace resample_detail

// Windowed-sinc resampler (Kaiser beta=8, 32 zero crossings of half-width).
// Downsampling only; the kernel cutoff sits at the target Nyquist.
inline Waveform resample(const Waveform& w, int target_rate_hz) {
    if (target_rate_hz <= 0) throw InvalidArgument("resample: target rate must be positive");
    if (target_rate_hz > w.sample_rate_hz) throw UnsupportedError("resample: upsampling not supported");
    if (target_rate_hz == w.sample_rate_hz) return w;

    const double ratio = static_cast<double>(target_rate_hz) / w.sample_rate_hz;
    const size_t n_in = w.samples.size();
    const size_t n_out = static_cast<size_t>(std::llround(static_cast<double>(n_in) * ratio));

    constexpr double kBeta = 8.0;
    constexpr double kHalfWidth = 32.0;  // zero crossings on each side
    const double cutoff = ratio;         // relative to the input Nyquist
    const double half_span = kHalfWidth / cutoff;
    const double i0_beta = resample_detail::bessel_i0(kBeta);

    Waveform out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(n_out);
    for (size_t j = 0; j < n_out; ++j) {
        const double t = static_cast<double>(j) / ratio;
        const long lo = static_cast<long>(std::ceil(t - half_span));
        const long hi = static_cast<long>(std::floor(t + half_span));
        double acc = 0.0;
        for (long i = std::max(lo, 0l); i <= std::min<long>(hi, static_cast<long>(n_in) - 1); ++i) {
            const double tau = t - static_cast<double>(i);
            const double u = tau / half_span;
            const double window = resample_detail::bessel_i0(kBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
            acc += w.samples[i] * cutoff * resample_detail::sinc(cutoff * tau) * window;
        }
        out.samples[j] = acc;
    }
    return out;
}

// The full conditioning chain in the order the recordings go through it.
inline Waveform preprocess(const Waveform& w, const PreprocessParams& p = {}) {
    if (p.lowpass_cutoff_hz >= p.target_rate_hz / 2.0)
        throw InvalidArgument("preprocess: lowpass cutoff must stay below the target Nyquist");
    Waveform out = normalize_loudness(w, p.target_peak);
    out = lowpass_filter(out, p.lowpass_cutoff_hz, p.lowpass_order);
    return resample(out, p.target_rate_hz);
}

}  // namespace coughlab
