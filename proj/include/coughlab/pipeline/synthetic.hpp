// Synthetic screening corpus: tone-burst "cancer" subjects against
// noise-burst "healthy" subjects, with balanced demographics. Burst duty
// stays near 12% so the envelope comparator has headroom.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "coughlab/audio_io.hpp"
#include "coughlab/common.hpp"

namespace coughlab {

struct SyntheticParams {
    int subjects_per_class = 20;
    double duration_s = 5.0;
    int sample_rate_hz = 16000;
    int bursts_per_recording = 2;
    double burst_s = 0.3;
    double amplitude = 0.85;
    double background = 1e-3;
};

namespace synthetic_detail {

// linear attack and release around a flat sustain
inline double burst_envelope(double t, double burst_s) {
    const double attack = 0.03, release = 0.06;
    if (t < 0.0 || t > burst_s) return 0.0;
    if (t < attack) return t / attack;
    if (t > burst_s - release) return (burst_s - t) / release;
    return 1.0;
}

}  // namespace synthetic_detail

// Writes WAV files and a manifest under `dir`; returns the manifest path.
inline std::string generate_synthetic_corpus(const std::string& dir, uint64_t seed,
                                             const SyntheticParams& p = {}) {
    if (p.subjects_per_class < 2) throw InvalidArgument("synthetic corpus: need >= 2 subjects per class");
    if (p.bursts_per_recording < 1 || p.burst_s <= 0.0 || p.duration_s <= 0.0)
        throw InvalidArgument("synthetic corpus: bad burst geometry");
    if (p.burst_s * p.bursts_per_recording > 0.2 * p.duration_s)
        throw InvalidArgument("synthetic corpus: burst duty above 20% defeats the segmenter");

    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "audio");
    std::ofstream manifest(fs::path(dir) / "manifest.csv");
    if (!manifest) throw IoError("cannot create manifest under " + dir);
    manifest << "subject_id,label,age,sex,smoking,audio_path\n";

    const int n_samples = static_cast<int>(p.duration_s * p.sample_rate_hz);
    char idbuf[16];
    for (int cls = 0; cls < 2; ++cls) {
        const bool cancer = cls == 1;
        for (int i = 0; i < p.subjects_per_class; ++i) {
            std::snprintf(idbuf, sizeof(idbuf), "%c%02d", cancer ? 'c' : 'h', i);
            const std::string id = idbuf;
            auto rng = make_rng(seed, "synthetic:" + id);
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            std::uniform_real_distribution<double> jitter(-0.1, 0.1);

            Waveform w;
            w.sample_rate_hz = p.sample_rate_hz;
            w.samples.resize(n_samples);
            for (auto& s : w.samples) s = p.background * unit(rng);

            // per-subject tone frequency for the cancer class
            const double f0 = 400.0 + (i * 37) % 400 + 10.0 * unit(rng);
            const double phase = 3.14159265358979 * unit(rng);
            for (int b = 0; b < p.bursts_per_recording; ++b) {
                const double start =
                    (b + 1) * p.duration_s / (p.bursts_per_recording + 1) - p.burst_s / 2.0 +
                    jitter(rng);
                const int s0 = static_cast<int>(start * p.sample_rate_hz);
                const int len = static_cast<int>(p.burst_s * p.sample_rate_hz);
                for (int k = 0; k < len; ++k) {
                    const int idx = s0 + k;
                    if (idx < 0 || idx >= n_samples) continue;
                    const double t = static_cast<double>(k) / p.sample_rate_hz;
                    const double env = synthetic_detail::burst_envelope(t, p.burst_s);
                    double content;
                    if (cancer)
                        content = std::sin(2.0 * 3.14159265358979 * f0 * t + phase) +
                                  0.05 * unit(rng);
                    else
                        content = unit(rng);
                    w.samples[idx] += p.amplitude * env * content;
                }
            }
            for (auto& s : w.samples) s = std::clamp(s, -1.0, 1.0);

            const std::string rel = "audio/" + id + ".wav";
            write_wav((fs::path(dir) / rel).string(), w, 16);

            // 10 young / 10 old per class, sexes alternating within each half,
            // so every class x sex x age cell is populated
            const int half = p.subjects_per_class / 2;
            const bool old_group = i >= half;
            const int age = old_group ? 58 + 2 * (i - half) : 35 + 2 * i;
            const char* sex = i % 2 == 0 ? "male" : "female";
            const char* smoking = cancer ? (i % 4 == 1 ? "never" : "ever")
                                         : (i % 5 == 0 ? "ever" : "never");
            manifest << id << ",";
            manifest << (cancer ? "cancer" : "healthy") << ",";
            manifest << age << "," << sex << "," << smoking << "," << rel << "\n";
        }
    }
    if (!manifest) throw IoError("failed writing manifest under " + dir);
    return (fs::path(dir) / "manifest.csv").string();
}

}  // namespace coughlab
