#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/guidance.hpp"
#include "toonshade/image.hpp"
#include "toonshade/models.hpp"
#include "toonshade/rng.hpp"
#include "toonshade/tensor.hpp"

namespace toonshade {

// Deterministic toy models. They make the whole engine runnable and
// verifiable without any pretrained weights: the oracle denoiser checks the
// sampler algebra, the frame-local denoiser checks window blending, the
// echo denoiser checks conditioning plumbing, and the conditioned denoiser
// gives --toy-models renders a recognizable output.

namespace detail {

inline void check_window_slice(const DenoiseRequest& request, int total_frames, int max_window) {
    const Window& w = request.window;
    require(w.l >= 1 && w.l <= w.r && w.r <= total_frames, ErrorKind::contract,
            "window [" + std::to_string(w.l) + "," + std::to_string(w.r) +
                "] out of range for " + std::to_string(total_frames) + " frames");
    require(w.length() <= max_window, ErrorKind::contract,
            "window length " + std::to_string(w.length()) + " exceeds max_window " +
                std::to_string(max_window));
    require(request.latents.shape().frames == w.length(), ErrorKind::contract,
            "latent slice frame count does not match the window");
}

// Sum of scale-weighted controls on the latent grid; zero if none.
inline Tensor4 control_mix(const DenoiseRequest& request, bool remap_signed) {
    Tensor4 mix(request.latents.shape());
    for (const ControlSignal& control : request.controls) {
        const Tensor4 resampled = resample_nearest(control.frames, request.latents.shape());
        auto src = resampled.values();
        auto dst = mix.values();
        const double scale = control.conditioning_scale;
        for (size_t i = 0; i < dst.size(); ++i) {
            const double v = remap_signed ? 2.0 * static_cast<double>(src[i]) - 1.0
                                          : static_cast<double>(src[i]);
            dst[i] = static_cast<float>(static_cast<double>(dst[i]) + scale * v);
        }
    }
    return mix;
}

}  // namespace detail

// Returns the stored ground-truth noise slice for any window; the sampler
// must then reconstruct the clean latents exactly.
class ToyOracleDenoiser : public Denoiser {
public:
    explicit ToyOracleDenoiser(Tensor4 true_noise) : noise_(std::move(true_noise)) {}

    Tensor4 denoise(const DenoiseRequest& request) override {
        detail::check_window_slice(request, static_cast<int>(noise_.shape().frames),
                                   max_window());
        require(request.latents.shape().height == noise_.shape().height &&
                    request.latents.shape().width == noise_.shape().width &&
                    request.latents.shape().channels == noise_.shape().channels,
                ErrorKind::contract, "latent slice geometry does not match the stored noise");
        return noise_.slice_frames(request.window.l - 1, request.window.length());
    }

    int max_window() const override { return static_cast<int>(noise_.shape().frames); }

private:
    Tensor4 noise_;
};

// Per-frame affine map a*x + b, independent of window membership. Sliding
// window blending must reproduce a single full-video window bit-for-bit
// (up to float rounding) on such a denoiser.
class ToyFrameLocalDenoiser : public Denoiser {
public:
    ToyFrameLocalDenoiser(double a, double b) : a_(a), b_(b) {}

    Tensor4 denoise(const DenoiseRequest& request) override {
        detail::check_window_slice(request, 1 << 20, max_window());
        Tensor4 out(request.latents.shape());
        auto src = request.latents.values();
        auto dst = out.values();
        for (size_t i = 0; i < dst.size(); ++i) {
            dst[i] = static_cast<float>(a_ * static_cast<double>(src[i]) + b_);
        }
        return out;
    }

    int max_window() const override { return 1 << 20; }

private:
    double a_;
    double b_;
};

// Echoes the conditioning: sum of scale * control frames resampled to the
// latent grid, ignoring latents, prompt and timestep.
class ToyControlEchoDenoiser : public Denoiser {
public:
    Tensor4 denoise(const DenoiseRequest& request) override {
        detail::check_window_slice(request, 1 << 20, max_window());
        return detail::control_mix(request, /*remap_signed=*/false);
    }

    int max_window() const override { return 1 << 20; }
};

// Acts like a perfectly conditioned model: predicts exactly the noise that
// makes the current step's clean estimate equal the control blend (mapped
// to the [-1,1] latent domain). Drives --toy-models renders toward an
// image assembled from the control signals.
class ToyConditionedDenoiser : public Denoiser {
public:
    Tensor4 denoise(const DenoiseRequest& request) override {
        detail::check_window_slice(request, 1 << 20, max_window());
        const Tensor4 target = detail::control_mix(request, /*remap_signed=*/true);
        const double abar = request.alpha_bar;
        require(abar > 0.0 && abar < 1.0, ErrorKind::contract,
                "conditioned toy denoiser needs alpha_bar in (0,1)");
        // e = (x_t - sqrt(abar)*target) / sqrt(1-abar)
        const double inv = 1.0 / std::sqrt(1.0 - abar);
        return lincomb(inv, request.latents, -std::sqrt(abar) * inv, target);
    }

    int max_window() const override { return 1 << 20; }
};

// Hash-keyed embeddings: same text, same flag -> identical tokens.
class ToyTextEncoder : public TextEncoder {
public:
    explicit ToyTextEncoder(int dim = 16) : dim_(dim) {}

    PromptEmbedding encode(std::string_view text, bool skip_final_attention) override {
        std::vector<std::string> tokens = split_tokens(text);
        if (tokens.empty()) tokens.push_back("");
        PromptEmbedding e;
        e.token_count = static_cast<int>(tokens.size());
        e.dim = dim_;
        e.values.resize(static_cast<size_t>(e.token_count) * dim_);
        for (size_t t = 0; t < tokens.size(); ++t) {
            const std::string purpose =
                (skip_final_attention ? "text-skip:" : "text:") + tokens[t];
            SeededRng rng(detail::fnv1a32(tokens[t]));
            rng.stream(static_cast<uint32_t>(t), purpose)
                .fill_normal(std::span<float>(e.values).subspan(t * static_cast<size_t>(dim_),
                                                                static_cast<size_t>(dim_)));
        }
        e.source = PromptSource::positive_text;
        return e;
    }

    int embedding_dim() const override { return dim_; }

private:
    static std::vector<std::string> split_tokens(std::string_view text) {
        std::vector<std::string> tokens;
        std::string current;
        for (char ch : text) {
            if (ch == ',') {
                if (!current.empty()) tokens.push_back(std::exchange(current, {}));
            } else if (ch == ' ' && current.empty()) {
                // skip leading spaces
            } else {
                current.push_back(ch);
            }
        }
        if (!current.empty()) tokens.push_back(std::move(current));
        for (auto& t : tokens) {
            while (!t.empty() && t.back() == ' ') t.pop_back();
        }
        return tokens;
    }

    int dim_;
};

// 8x8 box-average codec: RGB block means plus a luma channel, mapped to
// [-1,1]. Decoding inverts the affine map and upsamples by replication, so
// decode(encode(v)) is the 8x8 block average of v up to quantization.
class ToyCodec : public LatentCodec {
public:
    Tensor4 encode(const FrameVideo& video) override {
        validate_video(video);
        const int h = video.frames.front().height;
        const int w = video.frames.front().width;
        const int factor = spatial_factor();
        require(h % factor == 0 && w % factor == 0, ErrorKind::geometry,
                "frame dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                    " must be divisible by " + std::to_string(factor));
        const int64_t n = static_cast<int64_t>(video.frames.size());
        Tensor4 latents({n, h / factor, w / factor, latent_channels()});
        for (int64_t f = 0; f < n; ++f) {
            const Image8& img = video.frames[static_cast<size_t>(f)];
            for (int64_t by = 0; by < h / factor; ++by) {
                for (int64_t bx = 0; bx < w / factor; ++bx) {
                    double sum[3] = {0.0, 0.0, 0.0};
                    for (int dy = 0; dy < factor; ++dy) {
                        for (int dx = 0; dx < factor; ++dx) {
                            for (int c = 0; c < 3; ++c) {
                                sum[c] += img.at(static_cast<int>(by) * factor + dy,
                                                 static_cast<int>(bx) * factor + dx, c);
                            }
                        }
                    }
                    const double inv = 1.0 / (255.0 * factor * factor);
                    const double r = sum[0] * inv, g = sum[1] * inv, b = sum[2] * inv;
                    const double luma = 0.299 * r + 0.587 * g + 0.114 * b;
                    latents.at(f, by, bx, 0) = static_cast<float>(2.0 * r - 1.0);
                    latents.at(f, by, bx, 1) = static_cast<float>(2.0 * g - 1.0);
                    latents.at(f, by, bx, 2) = static_cast<float>(2.0 * b - 1.0);
                    latents.at(f, by, bx, 3) = static_cast<float>(2.0 * luma - 1.0);
                }
            }
        }
        return latents;
    }

    FrameVideo decode(const Tensor4& latents, Fps fps) override {
        const auto& s = latents.shape();
        require(s.channels == latent_channels(), ErrorKind::geometry,
                "expected " + std::to_string(latent_channels()) + " latent channels, got " +
                    std::to_string(s.channels));
        const int factor = spatial_factor();
        FrameVideo video;
        video.fps = fps;
        video.frames.reserve(static_cast<size_t>(s.frames));
        for (int64_t f = 0; f < s.frames; ++f) {
            Image8 img(static_cast<int>(s.height) * factor, static_cast<int>(s.width) * factor);
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    for (int c = 0; c < 3; ++c) {
                        const float v = latents.at(f, y / factor, x / factor, c);
                        img.at(y, x, c) = to_byte((static_cast<double>(v) + 1.0) / 2.0 * 255.0);
                    }
                }
            }
            video.frames.push_back(std::move(img));
        }
        return video;
    }
};

namespace detail {

inline std::vector<double> luminance_plane(const Image8& img) {
    std::vector<double> lum(static_cast<size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            lum[static_cast<size_t>(y) * img.width + x] =
                (0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2)) /
                255.0;
        }
    }
    return lum;
}

// Sobel gradient magnitude with per-axis normalization; clamped borders.
inline double sobel_magnitude(const std::vector<double>& lum, int h, int w, int y, int x) {
    auto at = [&](int yy, int xx) {
        yy = std::clamp(yy, 0, h - 1);
        xx = std::clamp(xx, 0, w - 1);
        return lum[static_cast<size_t>(yy) * w + xx];
    };
    const double gx = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                      (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
    const double gy = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                      (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
    return std::min(1.0, std::hypot(gx / 4.0, gy / 4.0));
}

}  // namespace detail

// Edge extractor: Sobel magnitude, optionally inverted to the lineart
// convention (white background, dark strokes).
class SobelEdgeExtractor : public ControlExtractor {
public:
    explicit SobelEdgeExtractor(bool inverted) : inverted_(inverted) {}

    Tensor4 extract(const FrameVideo& video) override {
        validate_video(video);
        const int h = video.frames.front().height;
        const int w = video.frames.front().width;
        Tensor4 out({static_cast<int64_t>(video.frames.size()), h, w, 1});
        for (size_t f = 0; f < video.frames.size(); ++f) {
            const auto lum = detail::luminance_plane(video.frames[f]);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double mag = detail::sobel_magnitude(lum, h, w, y, x);
                    out.at(static_cast<int64_t>(f), y, x, 0) =
                        static_cast<float>(inverted_ ? 1.0 - mag : mag);
                }
            }
        }
        return out;
    }

private:
    bool inverted_;
};

class LuminanceDepthExtractor : public ControlExtractor {
public:
    Tensor4 extract(const FrameVideo& video) override {
        validate_video(video);
        const int h = video.frames.front().height;
        const int w = video.frames.front().width;
        Tensor4 out({static_cast<int64_t>(video.frames.size()), h, w, 1});
        for (size_t f = 0; f < video.frames.size(); ++f) {
            const auto lum = detail::luminance_plane(video.frames[f]);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    out.at(static_cast<int64_t>(f), y, x, 0) =
                        static_cast<float>(lum[static_cast<size_t>(y) * w + x]);
                }
            }
        }
        return out;
    }
};

// 4x4 box blur of the RGB channels, clamped at image borders; stands in
// for the tile/colorization pathway.
class BoxBlurColorExtractor : public ControlExtractor {
public:
    Tensor4 extract(const FrameVideo& video) override {
        validate_video(video);
        const int h = video.frames.front().height;
        const int w = video.frames.front().width;
        Tensor4 out({static_cast<int64_t>(video.frames.size()), h, w, 3});
        for (size_t f = 0; f < video.frames.size(); ++f) {
            const Image8& img = video.frames[f];
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double sum[3] = {0.0, 0.0, 0.0};
                    for (int dy = -1; dy <= 2; ++dy) {
                        for (int dx = -1; dx <= 2; ++dx) {
                            const int yy = std::clamp(y + dy, 0, h - 1);
                            const int xx = std::clamp(x + dx, 0, w - 1);
                            for (int c = 0; c < 3; ++c) sum[c] += img.at(yy, xx, c);
                        }
                    }
                    for (int c = 0; c < 3; ++c) {
                        out.at(static_cast<int64_t>(f), y, x, c) =
                            static_cast<float>(sum[c] / (16.0 * 255.0));
                    }
                }
            }
        }
        return out;
    }
};

// Temporal moving average over a centered window, clamped at the video
// bounds. window = 1 is the identity; occupies the deflickering slot.
class ToyMovingAveragePostProcessor : public PostProcessor {
public:
    explicit ToyMovingAveragePostProcessor(int window, FastBlendConfig config = {})
        : PostProcessor(std::move(config)), window_(window) {
        require(window >= 1, ErrorKind::parameter, "moving-average window must be positive");
    }

    FrameVideo process(const FrameVideo& video) override {
        validate_video(video);
        if (window_ == 1) return video;
        const int n = static_cast<int>(video.frames.size());
        FrameVideo out;
        out.fps = video.fps;
        out.frames.reserve(video.frames.size());
        for (int i = 0; i < n; ++i) {
            const int lo = std::max(0, i - (window_ - 1) / 2);
            const int hi = std::min(n - 1, i + window_ / 2);
            Image8 img(video.frames.front().height, video.frames.front().width);
            const size_t pixels = img.rgb.size();
            std::vector<double> acc(pixels, 0.0);
            for (int j = lo; j <= hi; ++j) {
                const auto& src = video.frames[static_cast<size_t>(j)].rgb;
                for (size_t p = 0; p < pixels; ++p) acc[p] += src[p];
            }
            const double inv = 1.0 / (hi - lo + 1);
            for (size_t p = 0; p < pixels; ++p) img.rgb[p] = to_byte(acc[p] * inv);
            out.frames.push_back(std::move(img));
        }
        return out;
    }

private:
    int window_;
};

inline std::map<ControlKind, std::shared_ptr<ControlExtractor>> toy_extractors() {
    return {
        {ControlKind::outline, std::make_shared<SobelEdgeExtractor>(/*inverted=*/true)},
        {ControlKind::softedge, std::make_shared<SobelEdgeExtractor>(/*inverted=*/false)},
        {ControlKind::depth, std::make_shared<LuminanceDepthExtractor>()},
        {ControlKind::color, std::make_shared<BoxBlurColorExtractor>()},
    };
}

// Hermetic all-toy bundle; the editing variant carries a light temporal
// smoother in the post-processing slot.
inline ModelBundle make_toy_bundle(bool editing_stage = false) {
    ModelBundle bundle;
    bundle.denoiser = std::make_shared<ToyConditionedDenoiser>();
    bundle.text_encoder = std::make_shared<ToyTextEncoder>();
    bundle.codec = std::make_shared<ToyCodec>();
    bundle.extractors = toy_extractors();
    if (editing_stage) {
        bundle.post_processor = std::make_shared<ToyMovingAveragePostProcessor>(3);
    }
    return bundle;
}

}  // namespace toonshade
