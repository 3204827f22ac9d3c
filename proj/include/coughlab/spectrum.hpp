// Welch power spectra and the frequency-domain descriptors computed on them.
#pragma once

#include <cmath>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/dsp.hpp"
#include "coughlab/segment.hpp"

namespace coughlab {

struct PowerSpectrum {
    std::vector<double> freqs_hz;  // ascending, [0, Nyquist]
    std::vector<double> power;     // nonnegative, same length
};

struct WelchParams {
    size_t frame_length = 1024;
    double overlap = 0.5;
};

// Welch periodogram: Hann-windowed frames, 50% overlap, averaged
// magnitude-squared, one-sided density scaling. Segments shorter than one
// frame are zero-padded into a single frame.
inline PowerSpectrum welch_power_spectrum(const std::vector<double>& samples, int sample_rate_hz,
                                          const WelchParams& p = {}) {
    if (samples.empty()) throw InvalidArgument("welch: empty input");
    const size_t frame = p.frame_length;
    const size_t hop = std::max<size_t>(1, static_cast<size_t>(frame * (1.0 - p.overlap)));
    const auto window = dsp::hann_window(frame);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    const size_t n_bins = frame / 2 + 1;
    std::vector<double> acc(n_bins, 0.0);
    size_t n_frames = 0;
    std::vector<double> buf(frame);
    for (size_t start = 0; start == 0 || start + frame <= samples.size(); start += hop) {
        for (size_t i = 0; i < frame; ++i)
            buf[i] = (start + i < samples.size() ? samples[start + i] : 0.0) * window[i];
        auto spec = dsp::power_spectrum_frame(buf, frame);
        for (size_t k = 0; k < n_bins; ++k) acc[k] += spec[k];
        ++n_frames;
        if (start + frame >= samples.size()) break;
    }

    const double scale = 1.0 / (static_cast<double>(n_frames) * window_power * sample_rate_hz);
    PowerSpectrum ps;
    ps.freqs_hz.resize(n_bins);
    ps.power.resize(n_bins);
    for (size_t k = 0; k < n_bins; ++k) {
        ps.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(frame);
        double v = acc[k] * scale;
        if (k != 0 && k != n_bins - 1) v *= 2.0;  // fold the negative frequencies
        ps.power[k] = v;
    }
    return ps;
}

inline PowerSpectrum power_spectrum(const CoughSegment& seg, const WelchParams& p = {}) {
    return welch_power_spectrum(seg.samples, seg.sample_rate_hz, p);
}

struct SpectralFeatures {
    double dominant_frequency_hz = 0.0;
    double centroid_hz = 0.0;
    double rolloff_hz = 0.0;
    double spread_hz = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double bandwidth_hz = 0.0;
    double flatness = 0.0;
    double slope = 0.0;
    double decrease = 0.0;
};

// The ten spectral descriptors. Rolloff is the frequency below which
// `rolloff_pct` of the energy lies; kurtosis is plain (not excess);
// bandwidth is the order-2 deviation around the centroid.
inline SpectralFeatures spectral_features(const PowerSpectrum& ps, double rolloff_pct = 0.85) {
    const size_t n = ps.power.size();
    if (n == 0 || n != ps.freqs_hz.size()) throw InvalidArgument("spectral_features: malformed spectrum");
    double total = 0.0;
    for (double p : ps.power) total += p;
    if (total <= 0.0) throw DegenerateInput("spectral_features: zero total power");

    SpectralFeatures f;

    size_t argmax = 0;
    for (size_t k = 1; k < n; ++k)
        if (ps.power[k] > ps.power[argmax]) argmax = k;
    f.dominant_frequency_hz = ps.freqs_hz[argmax];

    double centroid = 0.0;
    for (size_t k = 0; k < n; ++k) centroid += ps.freqs_hz[k] * ps.power[k];
    centroid /= total;
    f.centroid_hz = centroid;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double d = ps.freqs_hz[k] - centroid;
        const double w = ps.power[k] / total;
        m2 += w * d * d;
        m3 += w * d * d * d;
        m4 += w * d * d * d * d;
    }
    f.spread_hz = std::sqrt(m2);
    f.bandwidth_hz = std::sqrt(m2);
    if (m2 > 0.0) {
        f.skewness = m3 / std::pow(m2, 1.5);
        f.kurtosis = m4 / (m2 * m2);
    }

    double cum = 0.0;
    f.rolloff_hz = ps.freqs_hz[n - 1];
    for (size_t k = 0; k < n; ++k) {
        cum += ps.power[k];
        if (cum >= rolloff_pct * total) {
            f.rolloff_hz = ps.freqs_hz[k];
            break;
        }
    }

    bool has_zero = false;
    double log_sum = 0.0;
    for (double p : ps.power) {
        if (p <= 0.0) {
            has_zero = true;
            break;
        }
        log_sum += std::log(p);
    }
    f.flatness = has_zero ? 0.0 : std::exp(log_sum / static_cast<double>(n)) / (total / static_cast<double>(n));

    double f_mean = 0.0, p_mean = total / static_cast<double>(n);
    for (double fr : ps.freqs_hz) f_mean += fr;
    f_mean /= static_cast<double>(n);
    double cov = 0.0, var_f = 0.0;
    for (size_t k = 0; k < n; ++k) {
        cov += (ps.freqs_hz[k] - f_mean) * (ps.power[k] - p_mean);
        var_f += (ps.freqs_hz[k] - f_mean) * (ps.freqs_hz[k] - f_mean);
    }
    f.slope = var_f > 0.0 ? cov / var_f : 0.0;

    double dec_num = 0.0, dec_den = 0.0;
    for (size_t k = 1; k < n; ++k) {
        dec_num += (ps.power[k] - ps.power[0]) / static_cast<double>(k);
        dec_den += ps.power[k];
    }
    f.decrease = dec_den > 0.0 ? dec_num / dec_den : 0.0;

    return f;
}

inline constexpr size_t kNumPsdBands = 8;
inline constexpr double kPsdBands[kNumPsdBands][2] = {
    {0.0, 200.0},    {300.0, 425.0},   {500.0, 650.0},   {950.0, 1150.0},
    {1400.0, 1800.0}, {2300.0, 2400.0}, {2850.0, 2950.0}, {3800.0, 3900.0}};

// Power summed over bins whose center frequency lies in [lo, hi).
inline std::array<double, kNumPsdBands> psd_band_powers(const PowerSpectrum& ps) {
    std::array<double, kNumPsdBands> bands{};
    for (size_t k = 0; k < ps.freqs_hz.size(); ++k) {
        const double f = ps.freqs_hz[k];
        for (size_t b = 0; b < kNumPsdBands; ++b)
            if (f >= kPsdBands[b][0] && f < kPsdBands[b][1]) bands[b] += ps.power[k];
    }
    return bands;
}

}  // namespace coughlab
