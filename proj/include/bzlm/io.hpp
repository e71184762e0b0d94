#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "bzlm/field.hpp"
#include "bzlm/geometry.hpp"
#include "bzlm/measurement.hpp"

namespace bzlm {

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what_)
        : std::runtime_error(path + ": " + what_), path(path) {}
    std::string path;
};

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::invalid_argument(context + ": bad number '" + std::string(text) + "'");
    return value;
}

// CSV with header "time,potential", one row per sample, LF line endings,
// round-trip float formatting.
inline void write_trace_csv(const PotentialTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "time,potential\n";
    for (std::size_t k = 0; k < trace.samples.size(); ++k)
        out << format_double(trace.time_at(k)) << ',' << format_double(trace.samples[k])
            << '\n';
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

// Read a two-column (time, value) CSV back into a trace. The first column
// only fixes the sample spacing (taken from the first difference); values are
// parsed exactly, so a written trace re-imports bitwise.
inline PotentialTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    PotentialTrace trace;
    trace.record_stride = 1;
    trace.dt = 1.0;
    std::string line;
    std::vector<double> times;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            continue;  // header row
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw IoError(path, "line " + std::to_string(lineno) + ": expected 2 columns");
        const std::string ctx = path + ":" + std::to_string(lineno);
        times.push_back(parse_double(std::string_view(line).substr(0, comma), ctx));
        trace.samples.push_back(
            parse_double(std::string_view(line).substr(comma + 1), ctx));
    }
    if (first) throw IoError(path, "empty file");
    if (times.size() >= 2) trace.dt = times[1] - times[0];
    if (!(trace.dt > 0.0)) trace.dt = 1.0;
    return trace;
}

// Display form of a field: 255 where in-domain and u > threshold, 128 where
// in-domain otherwise, 0 outside the domain.
inline std::vector<std::uint8_t> render_snapshot(const ScalarField2D& u, const Mask& mask,
                                                 double threshold) {
    if (u.width != mask.width || u.height != mask.height)
        throw std::invalid_argument("render_snapshot: field and mask dimensions differ");
    std::vector<std::uint8_t> pixels(u.size(), 0);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!mask.in_domain[i]) continue;
        pixels[i] = u.values[i] > threshold ? 255 : 128;
    }
    return pixels;
}

// Binary portable graymap (P5), one byte per node.
inline void write_pgm(const std::vector<std::uint8_t>& pixels, int width, int height,
                      const std::string& path) {
    if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) !=
        pixels.size())
        throw std::invalid_argument("write_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

inline void write_snapshot(const ScalarField2D& u, const Mask& mask, double threshold,
                           const std::string& path) {
    write_pgm(render_snapshot(u, mask, threshold), u.width, u.height, path);
}

}  // namespace bzlm
