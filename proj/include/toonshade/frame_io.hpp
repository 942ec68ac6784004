#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <vector>

#include <png.h>

#include "toonshade/errors.hpp"
#include "toonshade/image.hpp"

namespace toonshade {

// PNG frame directories: zero-padded 5-digit, 1-based names (00001.png,
// 00002.png, ...). Loading tolerates any starting index but rejects gaps.

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace detail

inline Image8 read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.c_str(), "rb"));
    require(file != nullptr, ErrorKind::io, "cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorKind::io, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorKind::io, "png_create_info_struct failed");
    }

    Image8 image;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorKind::format, "failed to decode PNG " + path.string());
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    image = Image8(static_cast<int>(height), static_cast<int>(width));
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = image.rgb.data() + static_cast<size_t>(y) * width * 3;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

inline void write_png(const Image8& image, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.c_str(), "wb"));
    require(file != nullptr, ErrorKind::io, "cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    require(png != nullptr, ErrorKind::io, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(ErrorKind::io, "png_create_info_struct failed");
    }

    std::vector<png_const_bytep> rows(static_cast<size_t>(image.height));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorKind::io, "failed to encode PNG " + path.string());
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        rows[static_cast<size_t>(y)] =
            image.rgb.data() + static_cast<size_t>(y) * image.width * 3;
    }
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline std::string frame_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.png", index);
    return buf;
}

// Loads numbered PNG frames ordered by index. `pattern` is a regex whose
// first capture group is the frame number; the default matches the names
// save_frames emits.
inline FrameVideo load_frames(const std::filesystem::path& directory,
                              const std::string& pattern = R"((\d+)\.png)", Fps fps = {}) {
    require(std::filesystem::is_directory(directory), ErrorKind::io,
            directory.string() + " is not a directory");
    const std::regex re(pattern);
    std::map<int, std::filesystem::path> indexed;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, re) || m.size() < 2) continue;
        const int index = std::stoi(m[1].str());
        const auto [it, inserted] = indexed.emplace(index, entry.path());
        require(inserted, ErrorKind::sequence,
                "duplicate frame index " + std::to_string(index) + ": " + name + " and " +
                    it->second.filename().string());
    }
    require(!indexed.empty(), ErrorKind::io,
            "no frames matching '" + pattern + "' in " + directory.string());

    int expected = indexed.begin()->first;
    for (const auto& [index, path] : indexed) {
        if (index != expected) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%05d", expected);
            fail(ErrorKind::sequence, "gap in frame numbering: missing frame " +
                                          std::string(buf) + " before " +
                                          path.filename().string());
        }
        ++expected;
    }

    FrameVideo video;
    video.fps = fps;
    video.frames.reserve(indexed.size());
    for (const auto& [index, path] : indexed) {
        Image8 frame = read_png(path);
        if (!video.frames.empty()) {
            const auto& first = video.frames.front();
            require(frame.height == first.height && frame.width == first.width, ErrorKind::shape,
                    "frame dimensions mismatch: " + path.filename().string() + " is " +
                        std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                        ", expected " + std::to_string(first.width) + "x" +
                        std::to_string(first.height));
        }
        video.frames.push_back(std::move(frame));
    }
    return video;
}

inline void save_frames(const FrameVideo& video, const std::filesystem::path& directory) {
    validate_video(video);
    std::filesystem::create_directories(directory);
    for (size_t i = 0; i < video.frames.size(); ++i) {
        write_png(video.frames[i], directory / frame_name(static_cast<int>(i) + 1));
    }
}

}  // namespace toonshade
