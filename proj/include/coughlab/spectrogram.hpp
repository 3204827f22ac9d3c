// Mel-spectrogram rasters for the CNN input path.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "coughlab/common.hpp"
#include "coughlab/dsp.hpp"
#include "coughlab/mfcc.hpp"
#include "coughlab/segment.hpp"

namespace coughlab {

struct SpectrogramImage {
    static constexpr int kHeight = 224;
    static constexpr int kWidth = 224;
    static constexpr int kChannels = 3;

    // Row-major height x width x channels, values in [0, 1].
    std::vector<float> pixels = std::vector<float>(kHeight * kWidth * kChannels, 0.0f);

    float& at(int r, int c, int ch) { return pixels[(r * kWidth + c) * kChannels + ch]; }
    float at(int r, int c, int ch) const { return pixels[(r * kWidth + c) * kChannels + ch]; }
};

struct MelSpectrogramParams {
    size_t frame_length = 1024;
    size_t hop = 256;
    size_t n_mels = 128;
    double db_floor = -80.0;  // relative to the maximum
};

namespace spectrogram_detail {

// Bilinear resize of a row-major h_in x w_in grid.
inline std::vector<double> resize_bilinear(const std::vector<double>& src, size_t h_in, size_t w_in,
                                           size_t h_out, size_t w_out) {
    std::vector<double> dst(h_out * w_out);
    for (size_t r = 0; r < h_out; ++r) {
        double y = (static_cast<double>(r) + 0.5) * static_cast<double>(h_in) / static_cast<double>(h_out) - 0.5;
        y = std::clamp(y, 0.0, static_cast<double>(h_in - 1));
        const size_t y0 = static_cast<size_t>(y);
        const size_t y1 = std::min(y0 + 1, h_in - 1);
        const double fy = y - static_cast<double>(y0);
        for (size_t c = 0; c < w_out; ++c) {
            double x = (static_cast<double>(c) + 0.5) * static_cast<double>(w_in) / static_cast<double>(w_out) - 0.5;
            x = std::clamp(x, 0.0, static_cast<double>(w_in - 1));
            const size_t x0 = static_cast<size_t>(x);
            const size_t x1 = std::min(x0 + 1, w_in - 1);
            const double fx = x - static_cast<double>(x0);
            const double top = src[y0 * w_in + x0] * (1.0 - fx) + src[y0 * w_in + x1] * fx;
            const double bot = src[y1 * w_in + x0] * (1.0 - fx) + src[y1 * w_in + x1] * fx;
            dst[r * w_out + c] = top * (1.0 - fy) + bot * fy;
        }
    }
    return dst;
}

}  // namespace spectrogram_detail

// STFT -> mel power -> dB (floored relative to max) -> min-max to [0,1] ->
// bilinear resize to 224x224 -> grayscale replicated over 3 channels.
// Rows run low to high mel band, columns left to right in time.
inline SpectrogramImage mel_spectrogram_image(const CoughSegment& seg, const MelSpectrogramParams& p = {}) {
    if (seg.samples.empty()) throw InvalidArgument("mel_spectrogram_image: empty segment");
    const auto window = dsp::hann_window(p.frame_length);
    const auto bank = dsp::mel_filterbank(p.n_mels, p.frame_length, seg.sample_rate_hz);
    const auto starts = mfcc_detail::frame_starts(seg.samples.size(), p.frame_length, p.hop);
    const size_t n_frames = starts.size();

    // mel power grid: rows = bands, cols = frames
    std::vector<double> mel(p.n_mels * n_frames, 0.0);
    std::vector<double> buf(p.frame_length);
    double max_power = 0.0;
    for (size_t t = 0; t < n_frames; ++t) {
        for (size_t i = 0; i < p.frame_length; ++i)
            buf[i] = (starts[t] + i < seg.samples.size() ? seg.samples[starts[t] + i] : 0.0) * window[i];
        const auto spec = dsp::power_spectrum_frame(buf, p.frame_length);
        for (size_t m = 0; m < p.n_mels; ++m) {
            double e = 0.0;
            for (size_t k = 0; k < spec.size(); ++k) e += bank[m][k] * spec[k];
            mel[m * n_frames + t] = e;
            max_power = std::max(max_power, e);
        }
    }

    SpectrogramImage img;
    if (max_power <= 0.0) return img;  // silence maps to an all-zero image

    const double max_db = 10.0 * std::log10(max_power);
    const double floor_db = max_db + p.db_floor;
    double min_db = max_db;
    for (double& v : mel) {
        v = v > 0.0 ? std::max(10.0 * std::log10(v), floor_db) : floor_db;
        min_db = std::min(min_db, v);
    }
    const double range = max_db - min_db;
    for (double& v : mel) v = range > 0.0 ? (v - min_db) / range : 0.0;

    const auto resized = spectrogram_detail::resize_bilinear(mel, p.n_mels, n_frames,
                                                             SpectrogramImage::kHeight, SpectrogramImage::kWidth);
    for (int r = 0; r < SpectrogramImage::kHeight; ++r)
        for (int c = 0; c < SpectrogramImage::kWidth; ++c) {
            const float v = static_cast<float>(resized[r * SpectrogramImage::kWidth + c]);
            for (int ch = 0; ch < SpectrogramImage::kChannels; ++ch) img.at(r, c, ch) = v;
        }
    return img;
}

// Portable raster: one text header line "224 224 3", then row-major
// little-endian 32-bit floats.
inline void write_raster(const std::string& path, const SpectrogramImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);
    out << SpectrogramImage::kHeight << " " << SpectrogramImage::kWidth << " " << SpectrogramImage::kChannels << "\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path);
}

inline SpectrogramImage read_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    int h = 0, w = 0, c = 0;
    in >> h >> w >> c;
    in.ignore(1);  // newline
    if (h != SpectrogramImage::kHeight || w != SpectrogramImage::kWidth || c != SpectrogramImage::kChannels)
        throw FormatError(path + ": unexpected raster shape");
    SpectrogramImage img;
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != img.pixels.size() * sizeof(float))
        throw FormatError(path + ": truncated raster");
    return img;
}

}  // namespace coughlab
