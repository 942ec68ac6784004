#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "toonshade/image.hpp"

namespace toonshade::test {

// Self-cleaning unique temp directory.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<uint64_t> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("toonshade-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// Deterministic synthetic test frame: smooth gradients plus a moving block,
// so extractors and flows have something to bite on.
inline Image8 synthetic_frame(int height, int width, int frame_index) {
    Image8 img(height, width);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>((x * 255) / std::max(1, width - 1));
            img.at(y, x, 1) = static_cast<uint8_t>((y * 255) / std::max(1, height - 1));
            img.at(y, x, 2) = static_cast<uint8_t>((x + y + 7 * frame_index) % 256);
        }
    }
    const int bx = (frame_index * 3) % std::max(1, width - 4);
    for (int y = height / 4; y < height / 4 + std::min(4, height); ++y) {
        for (int x = bx; x < bx + 4 && x < width; ++x) {
            if (y >= height) break;
            img.at(y, x, 0) = 255;
            img.at(y, x, 1) = 255;
            img.at(y, x, 2) = 255;
        }
    }
    return img;
}

inline FrameVideo synthetic_video(int frames, int height, int width) {
    FrameVideo video;
    for (int f = 0; f < frames; ++f) video.frames.push_back(synthetic_frame(height, width, f));
    return video;
}

}  // namespace toonshade::test
