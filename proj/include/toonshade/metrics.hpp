#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/image.hpp"

namespace toonshade {

// Video-consistency measurement: warp frame i forward along its optical
// flow and compare with frame i+1. Flows are inputs (estimated elsewhere),
// consumed from "FLO1" files.

// Per-pixel displacement grid for one adjacent frame pair.
struct FlowField {
    int height = 0;
    int width = 0;
    std::vector<float> dxdy;  // interleaved (dx, dy), row-major

    FlowField() = default;
    FlowField(int h, int w) : height(h), width(w), dxdy(static_cast<size_t>(h) * w * 2, 0.0f) {
        require(h > 0 && w > 0, ErrorKind::shape, "flow dimensions must be positive");
    }

    float dx(int y, int x) const { return dxdy[(static_cast<size_t>(y) * width + x) * 2]; }
    float dy(int y, int x) const { return dxdy[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
    float& dx(int y, int x) { return dxdy[(static_cast<size_t>(y) * width + x) * 2]; }
    float& dy(int y, int x) { return dxdy[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
};

// Bilinear backward warp; samples outside the frame clamp to the edge.
// Integer-aligned sampling (e.g. zero flow) reproduces pixels bit-exactly.
inline Image8 warp(const Image8& frame, const FlowField& flow) {
    require(frame.height == flow.height && frame.width == flow.width, ErrorKind::shape,
            "flow dimensions " + std::to_string(flow.width) + "x" + std::to_string(flow.height) +
                " do not match frame " + std::to_string(frame.width) + "x" +
                std::to_string(frame.height));
    Image8 out(frame.height, frame.width);
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            double sx = x + static_cast<double>(flow.dx(y, x));
            double sy = y + static_cast<double>(flow.dy(y, x));
            sx = std::clamp(sx, 0.0, static_cast<double>(frame.width - 1));
            sy = std::clamp(sy, 0.0, static_cast<double>(frame.height - 1));
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, frame.width - 1);
            const int y1 = std::min(y0 + 1, frame.height - 1);
            const double wx = sx - x0;
            const double wy = sy - y0;
            for (int c = 0; c < 3; ++c) {
                const double top =
                    (1.0 - wx) * frame.at(y0, x0, c) + wx * frame.at(y0, x1, c);
                const double bot =
                    (1.0 - wx) * frame.at(y1, x0, c) + wx * frame.at(y1, x1, c);
                out.at(y, x, c) = to_byte((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return out;
}

// Mean squared error, in 0-255 units, between each flow-warped frame and
// its successor, averaged over all pairs, pixels and channels.
inline double pixel_mse(const FrameVideo& video, std::span<const FlowField> flows) {
    validate_video(video);
    const size_t n = video.frames.size();
    require(n >= 2, ErrorKind::insufficient_input,
            "pixel_mse needs at least 2 frames, got " + std::to_string(n));
    require(flows.size() == n - 1, ErrorKind::parameter,
            "expected " + std::to_string(n - 1) + " flow fields for " + std::to_string(n) +
                " frames, got " + std::to_string(flows.size()));
    double sum = 0.0;
    uint64_t count = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
        const Image8 warped = warp(video.frames[i], flows[i]);
        const Image8& target = video.frames[i + 1];
        for (size_t p = 0; p < warped.rgb.size(); ++p) {
            const double diff =
                static_cast<double>(warped.rgb[p]) - static_cast<double>(target.rgb[p]);
            sum += diff * diff;
        }
        count += warped.rgb.size();
    }
    return sum / static_cast<double>(count);
}

// "FLO1" flow file: magic, u32 LE height, u32 LE width, then height*width
// (dx, dy) pairs of f32 LE, row-major.
inline void write_flow(const FlowField& flow, std::ostream& sink) {
    auto put_u32 = [&](uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        sink.write(reinterpret_cast<const char*>(b), 4);
    };
    sink.write("FLO1", 4);
    put_u32(static_cast<uint32_t>(flow.height));
    put_u32(static_cast<uint32_t>(flow.width));
    for (float v : flow.dxdy) put_u32(std::bit_cast<uint32_t>(v));
    require(sink.good(), ErrorKind::io, "flow write failed");
}

inline FlowField read_flow(std::istream& source) {
    unsigned char header[12];
    source.read(reinterpret_cast<char*>(header), sizeof(header));
    require(source.gcount() == sizeof(header), ErrorKind::format,
            "flow stream shorter than the 12-byte header");
    require(header[0] == 'F' && header[1] == 'L' && header[2] == 'O' && header[3] == '1',
            ErrorKind::format, "bad flow magic (expected \"FLO1\")");
    auto get_u32 = [&](const unsigned char* p) {
        return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    };
    const uint32_t h = get_u32(header + 4);
    const uint32_t w = get_u32(header + 8);
    require(h > 0 && w > 0 && static_cast<uint64_t>(h) * w <= (uint64_t{1} << 30),
            ErrorKind::format, "invalid flow dimensions");
    FlowField flow(static_cast<int>(h), static_cast<int>(w));
    std::vector<unsigned char> raw(flow.dxdy.size() * 4);
    source.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<size_t>(source.gcount()) == raw.size(), ErrorKind::format,
            "truncated flow payload: expected " + std::to_string(raw.size()) + " bytes, got " +
                std::to_string(source.gcount()));
    for (size_t i = 0; i < flow.dxdy.size(); ++i) {
        flow.dxdy[i] = std::bit_cast<float>(get_u32(raw.data() + 4 * i));
    }
    return flow;
}

inline void write_flow_file(const FlowField& flow, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot open " + path.string() + " for writing");
    write_flow(flow, out);
}

inline FlowField read_flow_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    return read_flow(in);
}

inline std::string flow_name(int pair_index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.flo", pair_index);
    return buf;
}

// Loads flows 00001.flo .. 000(N-1).flo for an N-frame video; a missing
// file names the frame pair it belongs to.
inline std::vector<FlowField> load_flow_dir(const std::filesystem::path& directory,
                                            int frame_count) {
    require(frame_count >= 2, ErrorKind::insufficient_input,
            "need at least 2 frames to pair flows with");
    std::vector<FlowField> flows;
    flows.reserve(static_cast<size_t>(frame_count) - 1);
    for (int i = 1; i < frame_count; ++i) {
        const auto path = directory / flow_name(i);
        if (!std::filesystem::exists(path)) {
            fail(ErrorKind::sequence, "missing flow file " + flow_name(i) + " for frame pair " +
                                          std::to_string(i) + "->" + std::to_string(i + 1));
        }
        flows.push_back(read_flow_file(path));
    }
    return flows;
}

}  // namespace toonshade
