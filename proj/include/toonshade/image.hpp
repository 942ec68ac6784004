#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/tensor.hpp"

namespace toonshade {

struct Fps {
    uint32_t num = 30;
    uint32_t den = 1;

    bool operator==(const Fps&) const = default;
};

// 8-bit interleaved RGB image.
struct Image8 {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> rgb;  // height*width*3

    Image8() = default;
    Image8(int h, int w) : height(h), width(w), rgb(static_cast<size_t>(h) * w * 3, 0) {
        require(h > 0 && w > 0, ErrorKind::shape, "image dimensions must be positive");
    }

    uint8_t& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * width + x) * 3 + c]; }
    uint8_t at(int y, int x, int c) const {
        return rgb[(static_cast<size_t>(y) * width + x) * 3 + c];
    }

    bool operator==(const Image8&) const = default;
};

struct FrameVideo {
    std::vector<Image8> frames;
    Fps fps;
};

inline void validate_video(const FrameVideo& video) {
    require(!video.frames.empty(), ErrorKind::shape, "video must contain at least one frame");
    require(video.fps.num > 0 && video.fps.den > 0, ErrorKind::parameter,
            "fps must be a positive rational");
    const int h = video.frames.front().height;
    const int w = video.frames.front().width;
    for (size_t i = 0; i < video.frames.size(); ++i) {
        require(video.frames[i].height == h && video.frames[i].width == w, ErrorKind::shape,
                "frame " + std::to_string(i + 1) + " has dimensions " +
                    std::to_string(video.frames[i].width) + "x" +
                    std::to_string(video.frames[i].height) + ", expected " + std::to_string(w) +
                    "x" + std::to_string(h));
    }
}

inline uint8_t to_byte(double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Video as an (N, H, W, 3) tensor with values in [0, 1].
inline Tensor4 video_to_tensor(const FrameVideo& video) {
    validate_video(video);
    const int64_t n = static_cast<int64_t>(video.frames.size());
    const int64_t h = video.frames.front().height;
    const int64_t w = video.frames.front().width;
    Tensor4 t({n, h, w, 3});
    auto out = t.values();
    size_t k = 0;
    for (const auto& frame : video.frames) {
        for (uint8_t b : frame.rgb) out[k++] = static_cast<float>(b) / 255.0f;
    }
    return t;
}

// Inverse of video_to_tensor; accepts either 3-channel or single-channel
// (replicated to grey) tensors.
inline FrameVideo tensor_to_video(const Tensor4& t, Fps fps = {}) {
    const auto& s = t.shape();
    require(s.channels == 3 || s.channels == 1, ErrorKind::shape,
            "expected 1 or 3 channels, got " + std::to_string(s.channels));
    FrameVideo video;
    video.fps = fps;
    video.frames.reserve(static_cast<size_t>(s.frames));
    for (int64_t f = 0; f < s.frames; ++f) {
        Image8 img(static_cast<int>(s.height), static_cast<int>(s.width));
        for (int64_t y = 0; y < s.height; ++y) {
            for (int64_t x = 0; x < s.width; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const float v = t.at(f, y, x, s.channels == 3 ? c : 0);
                    img.at(static_cast<int>(y), static_cast<int>(x), c) =
                        to_byte(static_cast<double>(v) * 255.0);
                }
            }
        }
        video.frames.push_back(std::move(img));
    }
    return video;
}

// Bilinear resize with half-pixel centers.
inline Image8 resize_bilinear(const Image8& src, int height, int width) {
    require(height > 0 && width > 0, ErrorKind::parameter, "resize target must be positive");
    if (src.height == height && src.width == width) return src;
    Image8 dst(height, width);
    const double sy = static_cast<double>(src.height) / height;
    const double sx = static_cast<double>(src.width) / width;
    for (int y = 0; y < height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * src.at(y0, x0, c) + wx * src.at(y0, x1, c);
                const double bot = (1.0 - wx) * src.at(y1, x0, c) + wx * src.at(y1, x1, c);
                dst.at(y, x, c) = to_byte((1.0 - wy) * top + wy * bot);
            }
        }
    }
    return dst;
}

inline FrameVideo resize_video(const FrameVideo& video, int height, int width) {
    FrameVideo out;
    out.fps = video.fps;
    out.frames.reserve(video.frames.size());
    for (const auto& frame : video.frames) out.frames.push_back(resize_bilinear(frame, height, width));
    return out;
}

}  // namespace toonshade
