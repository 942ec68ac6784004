#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/tensor.hpp"

namespace toonshade {

// "TNSR" tensor exchange format, byte-exact on every platform:
//
//   bytes 0..3   magic "TNSR"
//   bytes 4..7   u32 LE rank, always 4
//   bytes 8..23  u32 LE dims: frames, height, width, channels
//   bytes 24..   frames*height*width*channels f32 LE, frame-major
//
// This is the only wire format between the engine and model plugins.

namespace detail {

inline void put_u32le(unsigned char* out, uint32_t v) {
    out[0] = static_cast<unsigned char>(v);
    out[1] = static_cast<unsigned char>(v >> 8);
    out[2] = static_cast<unsigned char>(v >> 16);
    out[3] = static_cast<unsigned char>(v >> 24);
}

inline uint32_t get_u32le(const unsigned char* in) {
    return static_cast<uint32_t>(in[0]) | (static_cast<uint32_t>(in[1]) << 8) |
           (static_cast<uint32_t>(in[2]) << 16) | (static_cast<uint32_t>(in[3]) << 24);
}

}  // namespace detail

inline void write_tensor(const Tensor4& t, std::ostream& sink) {
    uint64_t offset = 0;
    auto emit = [&](const unsigned char* bytes, size_t n) {
        sink.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
        if (!sink) {
            fail(ErrorKind::io, "tensor write failed at byte offset " + std::to_string(offset));
        }
        offset += n;
    };

    unsigned char header[24];
    header[0] = 'T';
    header[1] = 'N';
    header[2] = 'S';
    header[3] = 'R';
    detail::put_u32le(header + 4, 4u);
    detail::put_u32le(header + 8, static_cast<uint32_t>(t.shape().frames));
    detail::put_u32le(header + 12, static_cast<uint32_t>(t.shape().height));
    detail::put_u32le(header + 16, static_cast<uint32_t>(t.shape().width));
    detail::put_u32le(header + 20, static_cast<uint32_t>(t.shape().channels));
    emit(header, sizeof(header));

    constexpr size_t chunk_values = 16384;
    std::array<unsigned char, chunk_values * 4> buffer;
    auto values = t.values();
    size_t i = 0;
    while (i < values.size()) {
        const size_t n = std::min(chunk_values, values.size() - i);
        for (size_t j = 0; j < n; ++j) {
            detail::put_u32le(buffer.data() + 4 * j, std::bit_cast<uint32_t>(values[i + j]));
        }
        emit(buffer.data(), n * 4);
        i += n;
    }
}

inline Tensor4 read_tensor(std::istream& source) {
    unsigned char header[24];
    source.read(reinterpret_cast<char*>(header), sizeof(header));
    if (source.gcount() != sizeof(header)) {
        fail(ErrorKind::format, "tensor stream shorter than the 24-byte header");
    }
    if (header[0] != 'T' || header[1] != 'N' || header[2] != 'S' || header[3] != 'R') {
        fail(ErrorKind::format, "bad tensor magic (expected \"TNSR\")");
    }
    const uint32_t rank = detail::get_u32le(header + 4);
    if (rank != 4) {
        fail(ErrorKind::format, "unsupported rank field " + std::to_string(rank) +
                                    " (this format is rank-4 only)");
    }
    uint32_t dims[4];
    for (int d = 0; d < 4; ++d) dims[d] = detail::get_u32le(header + 8 + 4 * d);
    uint64_t total = 1;
    for (uint32_t d : dims) {
        if (d == 0) fail(ErrorKind::format, "tensor dimension is zero");
        total *= d;
        if (total > (uint64_t{1} << 33)) {
            fail(ErrorKind::format, "tensor too large: " + std::to_string(total) + " elements");
        }
    }

    std::vector<float> data(static_cast<size_t>(total));
    const uint64_t expected_bytes = total * 4;
    std::vector<unsigned char> raw(static_cast<size_t>(expected_bytes));
    source.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    const uint64_t got = static_cast<uint64_t>(source.gcount());
    if (got != expected_bytes) {
        fail(ErrorKind::format, "truncated tensor payload: expected " +
                                    std::to_string(expected_bytes) + " bytes, got " +
                                    std::to_string(got));
    }
    for (size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<float>(detail::get_u32le(raw.data() + 4 * i));
    }
    return Tensor4({static_cast<int64_t>(dims[0]), static_cast<int64_t>(dims[1]),
                    static_cast<int64_t>(dims[2]), static_cast<int64_t>(dims[3])},
                   std::move(data));
}

inline void write_tensor_file(const Tensor4& t, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot open " + path.string() + " for writing");
    write_tensor(t, out);
    out.close();
    require(out.good(), ErrorKind::io, "failed to finish writing " + path.string());
}

inline Tensor4 read_tensor_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open " + path.string());
    return read_tensor(in);
}

}  // namespace toonshade
