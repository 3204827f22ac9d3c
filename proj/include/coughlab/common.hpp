// Shared error types and small utilities used across the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coughlab {

inline constexpr const char* kVersion = "0.1.0";

// Validation-class failures (bad inputs, bad parameters) vs runtime-class
// failures (I/O, diverged training). The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct UnsupportedError : Error {
    using Error::Error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
struct DegenerateInput : Error {
    using Error::Error;
};
struct TrainingError : Error {
    using Error::Error;
};

namespace detail {

inline std::string strprintf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

}  // namespace detail

// Shortest round-trippable representation, locale independent.
inline std::string format_real(double v, int sig_digits = 12) {
    char buf[64];
    snprintf(buf, sizeof(buf), "%.*g", sig_digits, v);
    return buf;
}

// Half-away-from-zero rounding at `decimals`, with a guard pass at ten extra
// digits so values that are exact in decimal (0.145) do not fall on the wrong
// side of the binary representation.
inline double round_to(double x, int decimals) {
    // A ten-digit guard scale first snaps x to its nearest exactly
    // representable neighbour, so values like 0.145 stored as 0.14499...9
    // still round half away from zero to 0.15.
    const double guard = std::pow(10.0, decimals + 10);
    const double scale = std::pow(10.0, decimals);
    return std::round(std::round(x * guard) / 1e10) / scale;
}

// Linear-interpolation quantile on a copy of the data (R type 7).
inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw InvalidArgument("quantile: empty sample");
    if (q < 0.0 || q > 1.0) throw InvalidArgument("quantile: q outside [0,1]");
    std::sort(xs.begin(), xs.end());
    double pos = q * static_cast<double>(xs.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = static_cast<size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

inline uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed for a pipeline stage from the run seed.
inline uint64_t stage_seed(uint64_t seed, std::string_view stage) {
    return splitmix64(seed ^ fnv1a64(stage));
}

inline std::mt19937_64 make_rng(uint64_t seed, std::string_view stage) {
    return std::mt19937_64(stage_seed(seed, stage));
}

// --- minimal CSV support -----------------------------------------------------

// Splits one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

inline std::string trim(std::string_view s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string_view::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(a, b - a + 1));
}

}  // namespace coughlab
