#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"

namespace toonshade {

struct Shape4 {
    int64_t frames = 0;
    int64_t height = 0;
    int64_t width = 0;
    int64_t channels = 0;

    int64_t size() const { return frames * height * width * channels; }
    int64_t frame_size() const { return height * width * channels; }

    bool operator==(const Shape4&) const = default;

    std::string str() const {
        return "(" + std::to_string(frames) + ", " + std::to_string(height) + ", " +
               std::to_string(width) + ", " + std::to_string(channels) + ")";
    }
};

// Frame-major 4-D float tensor: index = ((frame * H + y) * W + x) * C + c.
// A frame range is therefore one contiguous span, which is what the sliding
// window machinery slices on.
class Tensor4 {
public:
    Tensor4() = default;

    explicit Tensor4(Shape4 shape) : shape_(shape) {
        validate_shape(shape);
        data_.assign(static_cast<size_t>(shape.size()), 0.0f);
    }

    Tensor4(Shape4 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
        validate_shape(shape);
        require(static_cast<int64_t>(data_.size()) == shape.size(), ErrorKind::shape,
                "tensor data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape.str());
    }

    static Tensor4 full(Shape4 shape, float value) {
        Tensor4 t(shape);
        for (auto& v : t.data_) v = value;
        return t;
    }

    const Shape4& shape() const noexcept { return shape_; }
    int64_t size() const noexcept { return static_cast<int64_t>(data_.size()); }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }

    float& at(int64_t frame, int64_t y, int64_t x, int64_t c) {
        return data_[static_cast<size_t>(offset(frame, y, x, c))];
    }
    float at(int64_t frame, int64_t y, int64_t x, int64_t c) const {
        return data_[static_cast<size_t>(offset(frame, y, x, c))];
    }

    std::span<float> frame(int64_t index) {
        return std::span<float>(data_).subspan(static_cast<size_t>(index * shape_.frame_size()),
                                               static_cast<size_t>(shape_.frame_size()));
    }
    std::span<const float> frame(int64_t index) const {
        return std::span<const float>(data_).subspan(
            static_cast<size_t>(index * shape_.frame_size()),
            static_cast<size_t>(shape_.frame_size()));
    }

    // Copy of frames [first, first+count), 0-based.
    Tensor4 slice_frames(int64_t first, int64_t count) const {
        require(first >= 0 && count >= 1 && first + count <= shape_.frames, ErrorKind::shape,
                "frame slice [" + std::to_string(first) + ", +" + std::to_string(count) +
                    ") out of range for " + std::to_string(shape_.frames) + " frames");
        const int64_t fsz = shape_.frame_size();
        std::vector<float> out(data_.begin() + static_cast<size_t>(first * fsz),
                               data_.begin() + static_cast<size_t>((first + count) * fsz));
        return Tensor4({count, shape_.height, shape_.width, shape_.channels}, std::move(out));
    }

    bool all_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    static void validate_shape(const Shape4& s) {
        require(s.frames > 0 && s.height > 0 && s.width > 0 && s.channels > 0, ErrorKind::shape,
                "tensor dimensions must be positive, got " + s.str());
    }

    int64_t offset(int64_t frame, int64_t y, int64_t x, int64_t c) const {
        return ((frame * shape_.height + y) * shape_.width + x) * shape_.channels + c;
    }

    Shape4 shape_;
    std::vector<float> data_;
};

// a*x + b*y elementwise; coefficients applied in double, stored as float.
inline Tensor4 lincomb(double a, const Tensor4& x, double b, const Tensor4& y) {
    require(x.shape() == y.shape(), ErrorKind::shape,
            "shape mismatch: " + x.shape().str() + " vs " + y.shape().str());
    Tensor4 out(x.shape());
    auto xs = x.values();
    auto ys = y.values();
    auto os = out.values();
    for (size_t i = 0; i < os.size(); ++i) {
        os[i] = static_cast<float>(a * static_cast<double>(xs[i]) + b * static_cast<double>(ys[i]));
    }
    return out;
}

inline Tensor4 scale(double a, const Tensor4& x) {
    Tensor4 out(x.shape());
    auto xs = x.values();
    auto os = out.values();
    for (size_t i = 0; i < os.size(); ++i) os[i] = static_cast<float>(a * xs[i]);
    return out;
}

// Nearest-neighbour resample over height, width and channels (frame count
// must match). Used to bring control frames onto the latent grid.
inline Tensor4 resample_nearest(const Tensor4& src, const Shape4& target) {
    require(src.shape().frames == target.frames, ErrorKind::shape,
            "resample_nearest: frame count mismatch " + src.shape().str() + " -> " +
                target.str());
    Tensor4 out(target);
    const auto& ss = src.shape();
    for (int64_t f = 0; f < target.frames; ++f) {
        for (int64_t y = 0; y < target.height; ++y) {
            const int64_t sy = y * ss.height / target.height;
            for (int64_t x = 0; x < target.width; ++x) {
                const int64_t sx = x * ss.width / target.width;
                for (int64_t c = 0; c < target.channels; ++c) {
                    const int64_t sc = c * ss.channels / target.channels;
                    out.at(f, y, x, c) = src.at(f, sy, sx, sc);
                }
            }
        }
    }
    return out;
}

}  // namespace toonshade
