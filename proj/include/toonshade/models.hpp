#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "toonshade/errors.hpp"
#include "toonshade/guidance.hpp"
#include "toonshade/image.hpp"
#include "toonshade/scheduler.hpp"
#include "toonshade/tensor.hpp"
#include "toonshade/windows.hpp"

namespace toonshade {

// Plugin interface contracts for every neural slot. The engine never links
// model math directly; anything heavier than the bundled toys attaches via
// the subprocess adapter (plugin.hpp) over the tensor wire format.

enum class ControlKind { outline, color, depth, softedge };

inline const char* to_string(ControlKind kind) {
    switch (kind) {
        case ControlKind::outline: return "outline";
        case ControlKind::color: return "color";
        case ControlKind::depth: return "depth";
        case ControlKind::softedge: return "softedge";
    }
    return "?";
}

inline ControlKind control_kind_from_string(std::string_view name) {
    if (name == "outline") return ControlKind::outline;
    if (name == "color") return ControlKind::color;
    if (name == "depth") return ControlKind::depth;
    if (name == "softedge") return ControlKind::softedge;
    fail(ErrorKind::parameter, "unknown control kind '" + std::string(name) + "'");
}

// Conditioning frames aligned 1:1 with the latent frames; spatial dims may
// differ from the latent grid (extractors work at pixel resolution).
struct ControlSignal {
    ControlKind kind = ControlKind::outline;
    Tensor4 frames;
    double conditioning_scale = 1.0;
};

enum class TemporalMode { motion_modules, cross_frame_attention, none };

inline const char* to_string(TemporalMode mode) {
    switch (mode) {
        case TemporalMode::motion_modules: return "motion-modules";
        case TemporalMode::cross_frame_attention: return "cross-frame-attention";
        case TemporalMode::none: return "none";
    }
    return "?";
}

// Everything one windowed denoiser evaluation sees.
struct DenoiseRequest {
    const Tensor4& latents;  // slice covering `window`
    Window window;           // absolute 1-based frame range
    Timestep timestep = 0;
    double alpha_bar = 1.0;  // cumulative retention at `timestep`
    const PromptEmbedding& prompt;
    std::span<const ControlSignal> controls;  // slices aligned to `window`
    TemporalMode temporal_mode = TemporalMode::none;
};

// Denoiser contract: pure, shape-preserving, bounded window length.
// Motion-module backbones are trained on at most 32 consecutive frames, so
// real plugins declare max_window() <= 32; toy denoisers may accept more.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Tensor4 denoise(const DenoiseRequest& request) = 0;
    virtual int max_window() const = 0;
    virtual bool reentrant() const { return true; }
};

// Latent codec slot (the VAE in neural bundles): 8x spatial reduction into
// 4 channels, and back.
class LatentCodec {
public:
    virtual ~LatentCodec() = default;
    virtual Tensor4 encode(const FrameVideo& video) = 0;
    virtual FrameVideo decode(const Tensor4& latents, Fps fps) = 0;
    int spatial_factor() const { return 8; }
    int latent_channels() const { return 4; }
};

// Produces conditioning frames (values in [0,1]) from a pixel video.
class ControlExtractor {
public:
    virtual ~ControlExtractor() = default;
    virtual Tensor4 extract(const FrameVideo& video) = 0;
};

// Deflickering post-processor slot configuration.
struct FastBlendConfig {
    std::string inference_mode = "accurate";
    int sliding_window_size = 30;
    int batch_size = 64;
    bool tracking = true;
    int patch_size = 5;
    int iterations = 5;
    double guide_weight = 10.0;
};

class PostProcessor {
public:
    explicit PostProcessor(FastBlendConfig config = {}) : config_(std::move(config)) {}
    virtual ~PostProcessor() = default;
    virtual FrameVideo process(const FrameVideo& video) = 0;
    const FastBlendConfig& config() const noexcept { return config_; }

private:
    FastBlendConfig config_;
};

// The models bound to one pipeline stage.
struct ModelBundle {
    std::shared_ptr<Denoiser> denoiser;
    std::shared_ptr<TextEncoder> text_encoder;
    std::shared_ptr<LatentCodec> codec;
    std::map<ControlKind, std::shared_ptr<ControlExtractor>> extractors;
    std::shared_ptr<PostProcessor> post_processor;  // null = no post-processing
};

}  // namespace toonshade
