// Isolates individual cough events with an energy-envelope hysteresis
// comparator. Thresholds are relative to whole-recording envelope statistics,
// so boundaries are invariant to upstream gain choices.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"

namespace coughlab {

struct SegmenterParams {
    double frame_ms = 10.0;
    double onset_k = 2.0;    // envelope must exceed mu + onset_k * sigma
    double offset_k = 0.5;   // event ends when it falls below mu + offset_k * sigma
    double min_cough_ms = 200.0;
    double merge_gap_ms = 100.0;
    double pad_ms = 50.0;
};

struct CoughSegment {
    std::string subject_id;
    size_t start_sample = 0;
    size_t end_sample = 0;  // exclusive
    std::vector<double> samples;
    int sample_rate_hz = 0;

    double duration_s() const {
        return static_cast<double>(end_sample - start_sample) / sample_rate_hz;
    }
};

inline std::vector<double> rms_envelope(const std::vector<double>& samples, size_t frame_len) {
    const size_t n_frames = samples.size() / frame_len;
    std::vector<double> env(n_frames);
    for (size_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        for (size_t i = f * frame_len; i < (f + 1) * frame_len; ++i) acc += samples[i] * samples[i];
        env[f] = std::sqrt(acc / static_cast<double>(frame_len));
    }
    return env;
}

inline std::vector<CoughSegment> segment_coughs(const Waveform& w, const SegmenterParams& p = {},
                                                const std::string& subject_id = "") {
    if (p.onset_k <= p.offset_k) throw InvalidArgument("segment_coughs: onset_k must exceed offset_k");
    if (p.min_cough_ms <= 0.0) throw InvalidArgument("segment_coughs: min_cough_ms must be positive");

    const double rate = static_cast<double>(w.sample_rate_hz);
    const size_t frame_len = static_cast<size_t>(std::lround(p.frame_ms / 1000.0 * rate));
    if (frame_len == 0) throw InvalidArgument("segment_coughs: frame shorter than one sample");

    const auto env = rms_envelope(w.samples, frame_len);
    if (env.empty()) return {};

    double mu = 0.0;
    for (double e : env) mu += e;
    mu /= static_cast<double>(env.size());
    double var = 0.0;
    for (double e : env) var += (e - mu) * (e - mu);
    var /= static_cast<double>(env.size());
    const double sigma = std::sqrt(var);

    const double onset_thresh = mu + p.onset_k * sigma;
    const double offset_thresh = mu + p.offset_k * sigma;

    // Hysteresis pass over frames; boundaries land on frame edges.
    struct Span {
        size_t start, end;  // samples, end exclusive
    };
    std::vector<Span> spans;
    bool active = false;
    size_t start_frame = 0;
    for (size_t f = 0; f < env.size(); ++f) {
        if (!active && env[f] > onset_thresh) {
            active = true;
            start_frame = f;
        } else if (active && env[f] < offset_thresh) {
            spans.push_back({start_frame * frame_len, f * frame_len});
            active = false;
        }
    }
    if (active) spans.push_back({start_frame * frame_len, env.size() * frame_len});

    // Merge events separated by less than the gap.
    const size_t merge_gap = static_cast<size_t>(std::lround(p.merge_gap_ms / 1000.0 * rate));
    std::vector<Span> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.start - merged.back().end < merge_gap)
            merged.back().end = s.end;
        else
            merged.push_back(s);
    }

    // Drop events shorter than the minimum cough duration.
    const size_t min_len = static_cast<size_t>(std::lround(p.min_cough_ms / 1000.0 * rate));
    std::vector<Span> kept;
    for (const auto& s : merged)
        if (s.end - s.start >= min_len) kept.push_back(s);

    // Pad, clipped to the signal and to neighbour midpoints so segments
    // stay disjoint.
    const size_t pad = static_cast<size_t>(std::lround(p.pad_ms / 1000.0 * rate));
    std::vector<CoughSegment> out;
    for (size_t i = 0; i < kept.size(); ++i) {
        size_t lo = kept[i].start >= pad ? kept[i].start - pad : 0;
        size_t hi = std::min(kept[i].end + pad, w.samples.size());
        if (i > 0) {
            const size_t mid = (kept[i - 1].end + kept[i].start) / 2;
            lo = std::max(lo, mid);
        }
        if (i + 1 < kept.size()) {
            const size_t mid = (kept[i].end + kept[i + 1].start + 1) / 2;
            hi = std::min(hi, mid);
        }
        CoughSegment seg;
        seg.subject_id = subject_id;
        seg.start_sample = lo;
        seg.end_sample = hi;
        seg.samples.assign(w.samples.begin() + lo, w.samples.begin() + hi);
        seg.sample_rate_hz = w.sample_rate_hz;
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace coughlab
