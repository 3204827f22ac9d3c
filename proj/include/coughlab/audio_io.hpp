// WAV reading/writing and corpus manifest loading.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab {

struct Waveform {
    std::vector<double> samples;  // amplitudes in [-1, 1]
    int sample_rate_hz = 0;

    double duration_s() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
    }
};

enum class Label { healthy, cancer };
enum class Sex { male, female };
enum class Smoking { ever, never, not_given };

inline const char* to_string(Label l) { return l == Label::healthy ? "healthy" : "cancer"; }
inline const char* to_string(Sex s) { return s == Sex::male ? "male" : "female"; }
inline const char* to_string(Smoking s) {
    switch (s) {
        case Smoking::ever: return "ever";
        case Smoking::never: return "never";
        default: return "not_given";
    }
}

struct SubjectRecord {
    std::string subject_id;
    Label label = Label::healthy;
    int age_years = 0;
    Sex sex = Sex::male;
    Smoking smoking = Smoking::not_given;
    std::string audio_path;
};

namespace wav_detail {

inline uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline void write_u16(std::ostream& out, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

}  // namespace wav_detail

// Reads a RIFF/WAVE file: PCM 8/16/24-bit or IEEE float 32-bit, mono or
// stereo. Stereo is downmixed by channel mean; samples are scaled to [-1, 1].
inline Waveform read_wav(const std::string& path) {
    using namespace wav_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char tag[4];
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError(path + ": not a RIFF file");
    read_u32(in);  // chunk size
    in.read(tag, 4);
    if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError(path + ": not a WAVE file");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    bool have_fmt = false;
    std::vector<unsigned char> data;
    bool have_data = false;

    while (in.read(tag, 4)) {
        uint32_t size = read_u32(in);
        if (!in) throw FormatError(path + ": truncated chunk header");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError(path + ": fmt chunk too small");
            format = read_u16(in);
            channels = read_u16(in);
            sample_rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            in.ignore(size - 16);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data.resize(size);
            in.read(reinterpret_cast<char*>(data.data()), size);
            if (static_cast<uint32_t>(in.gcount()) != size) throw FormatError(path + ": truncated data chunk");
            have_data = true;
        } else {
            in.ignore(size + (size & 1));
        }
        if (size & 1 && std::memcmp(tag, "data", 4) == 0) in.ignore(1);
    }
    if (!have_fmt) throw FormatError(path + ": missing fmt chunk");
    if (!have_data) throw FormatError(path + ": missing data chunk");
    if (sample_rate == 0) throw FormatError(path + ": zero sample rate");
    if (channels != 1 && channels != 2)
        throw UnsupportedError(path + ": unsupported channel count " + std::to_string(channels));

    const bool pcm = format == 1;
    const bool ieee = format == 3;
    if (!pcm && !ieee) throw UnsupportedError(path + ": unsupported codec tag " + std::to_string(format));
    if (pcm && bits != 8 && bits != 16 && bits != 24)
        throw UnsupportedError(path + ": unsupported PCM bit depth " + std::to_string(bits));
    if (ieee && bits != 32) throw UnsupportedError(path + ": unsupported float bit depth " + std::to_string(bits));

    const size_t bytes_per_sample = bits / 8;
    const size_t frame_bytes = bytes_per_sample * channels;
    const size_t n_frames = data.size() / frame_bytes;
    if (n_frames == 0) throw DegenerateInput(path + ": empty audio");

    Waveform w;
    w.sample_rate_hz = static_cast<int>(sample_rate);
    w.samples.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (size_t ch = 0; ch < channels; ++ch) {
            const unsigned char* p = data.data() + i * frame_bytes + ch * bytes_per_sample;
            double v = 0.0;
            if (ieee) {
                float f;
                std::memcpy(&f, p, 4);
                v = std::clamp(static_cast<double>(f), -1.0, 1.0);
            } else if (bits == 8) {
                v = (static_cast<int>(p[0]) - 128) / 128.0;
            } else if (bits == 16) {
                int16_t s = static_cast<int16_t>(p[0] | (p[1] << 8));
                v = s / 32768.0;
            } else {  // 24-bit
                int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
                if (s & 0x800000) s |= ~0xffffff;
                v = s / 8388608.0;
            }
            acc += v;
        }
        w.samples[i] = acc / channels;
    }
    return w;
}

// Writes mono PCM (8/16/24-bit) or IEEE float 32-bit.
inline void write_wav(const std::string& path, const Waveform& w, int bits = 16) {
    using namespace wav_detail;
    if (w.samples.empty()) throw InvalidArgument("write_wav: empty waveform");
    if (bits != 8 && bits != 16 && bits != 24 && bits != 32)
        throw UnsupportedError("write_wav: unsupported bit depth " + std::to_string(bits));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path);

    const uint16_t format = bits == 32 ? 3 : 1;
    const uint32_t byte_depth = bits / 8;
    const uint32_t data_size = static_cast<uint32_t>(w.samples.size() * byte_depth);
    out.write("RIFF", 4);
    write_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, format);
    write_u16(out, 1);  // mono
    write_u32(out, static_cast<uint32_t>(w.sample_rate_hz));
    write_u32(out, static_cast<uint32_t>(w.sample_rate_hz) * byte_depth);
    write_u16(out, static_cast<uint16_t>(byte_depth));
    write_u16(out, static_cast<uint16_t>(bits));
    out.write("data", 4);
    write_u32(out, data_size);

    for (double x : w.samples) {
        if (bits == 32) {
            float f = static_cast<float>(x);
            out.write(reinterpret_cast<const char*>(&f), 4);
        } else if (bits == 8) {
            int v = static_cast<int>(std::lround(x * 128.0)) + 128;
            unsigned char b = static_cast<unsigned char>(std::clamp(v, 0, 255));
            out.write(reinterpret_cast<const char*>(&b), 1);
        } else if (bits == 16) {
            long v = std::lround(x * 32768.0);
            int16_t s = static_cast<int16_t>(std::clamp(v, -32768l, 32767l));
            char b[2] = {static_cast<char>(s & 0xff), static_cast<char>((s >> 8) & 0xff)};
            out.write(b, 2);
        } else {  // 24-bit
            long v = std::lround(x * 8388608.0);
            int32_t s = static_cast<int32_t>(std::clamp(v, -8388608l, 8388607l));
            char b[3] = {static_cast<char>(s & 0xff), static_cast<char>((s >> 8) & 0xff),
                         static_cast<char>((s >> 16) & 0xff)};
            out.write(b, 3);
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

// Loads the corpus manifest CSV. Header must be exactly
// subject_id,label,age,sex,smoking,audio_path. A blank smoking field maps to
// not_given; duplicate subject ids are rejected.
inline std::vector<SubjectRecord> load_manifest(const std::string& path) {
    auto rows = read_csv(path);
    if (rows.empty()) throw FormatError(path + ": empty manifest");
    const std::vector<std::string> expected = {"subject_id", "label", "age", "sex", "smoking", "audio_path"};
    if (rows[0] != expected) throw FormatError(path + ": bad header, expected subject_id,label,age,sex,smoking,audio_path");

    std::vector<SubjectRecord> records;
    std::unordered_set<std::string> seen;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != 6)
            throw FormatError(path + ": row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) + " fields");
        SubjectRecord r;
        r.subject_id = trim(row[0]);
        if (r.subject_id.empty()) throw FormatError(path + ": row " + std::to_string(i + 1) + ": empty subject_id");
        if (!seen.insert(r.subject_id).second)
            throw FormatError(path + ": duplicate subject_id " + r.subject_id);

        std::string label = trim(row[1]);
        if (label == "healthy")
            r.label = Label::healthy;
        else if (label == "cancer")
            r.label = Label::cancer;
        else
            throw FormatError(path + ": unknown label '" + label + "' for " + r.subject_id);

        try {
            size_t used = 0;
            r.age_years = std::stoi(trim(row[2]), &used);
            if (used != trim(row[2]).size() || r.age_years <= 0) throw std::invalid_argument("age");
        } catch (const std::exception&) {
            throw FormatError(path + ": unparseable age '" + row[2] + "' for " + r.subject_id);
        }

        std::string sex = trim(row[3]);
        if (sex == "male")
            r.sex = Sex::male;
        else if (sex == "female")
            r.sex = Sex::female;
        else
            throw FormatError(path + ": unknown sex '" + sex + "' for " + r.subject_id);

        std::string smoking = trim(row[4]);
        if (smoking == "ever")
            r.smoking = Smoking::ever;
        else if (smoking == "never")
            r.smoking = Smoking::never;
        else if (smoking.empty() || smoking == "not_given")
            r.smoking = Smoking::not_given;
        else
            throw FormatError(path + ": unknown smoking status '" + smoking + "' for " + r.subject_id);

        r.audio_path = trim(row[5]);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace coughlab
