// Mel-frequency cepstral coefficients averaged over frames.
#pragma once

#include <cmath>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/dsp.hpp"
#include "coughlab/segment.hpp"

namespace coughlab {

struct MfccParams {
    size_t frame_length = 1024;
    size_t hop = 256;
    size_t n_mels_filterbank = 40;
    size_t n_coeffs = 17;
};

namespace mfcc_detail {

inline constexpr double kLogFloor = 1e-10;

// Frame starts covering the segment; a short segment yields one zero-padded
// frame, matching the power-spectrum convention.
inline std::vector<size_t> frame_starts(size_t n_samples, size_t frame, size_t hop) {
    std::vector<size_t> starts;
    for (size_t s = 0; s == 0 || s + frame <= n_samples; s += hop) {
        starts.push_back(s);
        if (s + frame >= n_samples) break;
    }
    return starts;
}

}  // namespace mfcc_detail

// Per-frame log mel filterbank energies, rows = frames.
inline std::vector<std::vector<double>> log_mel_frames(const std::vector<double>& samples, int sample_rate_hz,
                                                       const MfccParams& p = {}) {
    if (samples.empty()) throw InvalidArgument("log_mel_frames: empty input");
    const auto window = dsp::hann_window(p.frame_length);
    const auto bank = dsp::mel_filterbank(p.n_mels_filterbank, p.frame_length, sample_rate_hz);
    const auto starts = mfcc_detail::frame_starts(samples.size(), p.frame_length, p.hop);

    std::vector<std::vector<double>> out;
    out.reserve(starts.size());
    std::vector<double> buf(p.frame_length);
    for (size_t s : starts) {
        for (size_t i = 0; i < p.frame_length; ++i)
            buf[i] = (s + i < samples.size() ? samples[s + i] : 0.0) * window[i];
        const auto spec = dsp::power_spectrum_frame(buf, p.frame_length);
        std::vector<double> log_energies(p.n_mels_filterbank);
        for (size_t m = 0; m < p.n_mels_filterbank; ++m) {
            double e = 0.0;
            for (size_t k = 0; k < spec.size(); ++k) e += bank[m][k] * spec[k];
            log_energies[m] = std::log(std::max(e, mfcc_detail::kLogFloor));
        }
        out.push_back(std::move(log_energies));
    }
    return out;
}

// Mean over frames of the first n_coeffs orthonormal DCT-II coefficients of
// the log mel energies.
inline std::vector<double> mfcc_means(const CoughSegment& seg, const MfccParams& p = {}) {
    if (p.hop > p.frame_length) throw InvalidArgument("mfcc_means: hop exceeds frame length");
    if (p.n_coeffs > p.n_mels_filterbank) throw InvalidArgument("mfcc_means: more coefficients than filters");
    const auto frames = log_mel_frames(seg.samples, seg.sample_rate_hz, p);

    std::vector<double> means(p.n_coeffs, 0.0);
    for (const auto& frame : frames) {
        const auto coeffs = dsp::dct2_orthonormal(frame, p.n_coeffs);
        for (size_t k = 0; k < p.n_coeffs; ++k) means[k] += coeffs[k];
    }
    for (double& m : means) m /= static_cast<double>(frames.size());
    return means;
}

}  // namespace coughlab
