#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "toonshade/config.hpp"
#include "toonshade/errors.hpp"
#include "toonshade/guidance.hpp"
#include "toonshade/image.hpp"
#include "toonshade/models.hpp"
#include "toonshade/rng.hpp"
#include "toonshade/scheduler.hpp"
#include "toonshade/tensor.hpp"
#include "toonshade/windows.hpp"

namespace toonshade {

// The denoising loop and the two-stage composition. Per timestep, every
// sliding window is evaluated on the positive and the negative prompt side,
// each side is blended across windows, the two are combined by
// classifier-free guidance, and the whole video takes one DDIM step.

struct StageConfig {
    int height = 0;
    int width = 0;
    double guidance_scale = 7.0;
    double strength = 1.0;
    int inference_steps = 10;
    int window_size = 16;
    int window_stride = 8;
    std::vector<std::pair<ControlKind, double>> controls;
    TemporalMode temporal_mode = TemporalMode::motion_modules;
    uint64_t seed = 0;
    std::string prompt = "best quality, perfect anime illustration";
    std::optional<std::filesystem::path> negative_embedding;
    bool clip_skip_final_attention = true;
    int hot_capacity = 0;  // 0 -> window_size
    // training-schedule convention of the backbone
    int num_train_steps = 1000;
    double beta_start = 0.00085;
    double beta_end = 0.012;

    int effective_hot_capacity() const { return hot_capacity > 0 ? hot_capacity : window_size; }

    static StageConfig from_file_settings(const StageFileSettings& file, TemporalMode mode,
                                          uint64_t seed, std::string prompt,
                                          std::optional<std::filesystem::path> negative = {}) {
        StageConfig cfg;
        cfg.height = file.frame_height;
        cfg.width = file.frame_width;
        cfg.guidance_scale = file.cfg_scale;
        cfg.strength = file.denoising_strength;
        cfg.inference_steps = file.inference_steps;
        cfg.window_size = file.window_size;
        cfg.window_stride = file.window_stride;
        cfg.controls = file.conditioning;
        cfg.temporal_mode = mode;
        cfg.seed = seed;
        cfg.prompt = std::move(prompt);
        cfg.negative_embedding = std::move(negative);
        return cfg;
    }
};

struct RunStats {
    int frames = 0;
    int windows = 0;
    int timesteps = 0;
    long denoiser_calls = 0;
    int peak_hot_frames = 0;
};

namespace detail {

inline std::vector<ControlSignal> slice_controls(std::span<const ControlSignal> controls,
                                                 const Window& window) {
    std::vector<ControlSignal> slices;
    slices.reserve(controls.size());
    for (const ControlSignal& control : controls) {
        slices.push_back(ControlSignal{control.kind,
                                       control.frames.slice_frames(window.l - 1, window.length()),
                                       control.conditioning_scale});
    }
    return slices;
}

[[noreturn]] inline void rethrow_plugin_error(const Error& e, const Window& window,
                                              Timestep timestep) {
    fail(ErrorKind::plugin, std::string(e.what()) + " (window [" + std::to_string(window.l) +
                                "," + std::to_string(window.r) + "], timestep " +
                                std::to_string(timestep) + ")");
}

}  // namespace detail

// Runs the full denoising loop for one stage and returns the final latents.
// With strength 1 the walk starts from pure noise; with strength < 1 the
// given latents are renoised to the first planned timestep first. The
// residency plan is replayed every timestep so the hot tier never holds
// more than the configured number of frames.
inline Tensor4 denoise_stage(const std::optional<Tensor4>& initial_latents, int frame_count,
                             std::span<const ControlSignal> controls, const StageConfig& config,
                             const ModelBundle& bundle, RunStats* stats = nullptr) {
    require(frame_count >= 1, ErrorKind::parameter, "frame count must be positive");
    require(config.height > 0 && config.height % 8 == 0 && config.width > 0 &&
                config.width % 8 == 0,
            ErrorKind::geometry, "stage resolution must be a positive multiple of 8");
    require(bundle.denoiser != nullptr && bundle.text_encoder != nullptr, ErrorKind::parameter,
            "bundle must provide a denoiser and a text encoder");
    require(config.window_size <= bundle.denoiser->max_window(), ErrorKind::parameter,
            "window_size " + std::to_string(config.window_size) +
                " exceeds the denoiser's max_window " +
                std::to_string(bundle.denoiser->max_window()));

    const int latent_channels = bundle.codec ? bundle.codec->latent_channels() : 4;
    const int factor = bundle.codec ? bundle.codec->spatial_factor() : 8;
    const Shape4 latent_shape{frame_count, config.height / factor, config.width / factor,
                              latent_channels};
    if (initial_latents) {
        require(initial_latents->shape() == latent_shape, ErrorKind::shape,
                "initial latents have shape " + initial_latents->shape().str() + ", expected " +
                    latent_shape.str());
    }
    for (const ControlSignal& control : controls) {
        require(control.frames.shape().frames == frame_count, ErrorKind::shape,
                std::string("control '") + to_string(control.kind) + "' covers " +
                    std::to_string(control.frames.shape().frames) + " frames, expected " +
                    std::to_string(frame_count));
        require(control.conditioning_scale >= 0.0 && control.conditioning_scale <= 1.0,
                ErrorKind::parameter, "conditioning scale must be in [0, 1]");
    }

    const NoiseSchedule schedule =
        NoiseSchedule::scaled_linear(config.num_train_steps, config.beta_start, config.beta_end);
    const TimestepPlan plan =
        plan_timesteps(schedule, config.inference_steps, config.strength);

    RunStats local;
    RunStats& st = stats ? *stats : local;
    st.frames = frame_count;
    st.timesteps = static_cast<int>(plan.size());

    if (plan.empty()) {
        require(initial_latents.has_value(), ErrorKind::parameter,
                "an empty timestep plan (strength " + std::to_string(config.strength) +
                    ") passes the initial latents through, but none were provided");
        st.windows = 0;
        return *initial_latents;
    }

    const SeededRng rng(config.seed);
    Tensor4 latents;
    if (config.strength >= 1.0) {
        latents = init_noise(latent_shape, rng);
    } else {
        require(initial_latents.has_value(), ErrorKind::parameter,
                "denoising strength < 1 requires initial latents to renoise");
        const Tensor4 noise = sample_normal(latent_shape, rng, "renoise");
        latents = add_noise(*initial_latents, noise, plan.timesteps.front(), schedule);
    }

    const WindowPlan window_plan =
        enumerate_windows(frame_count, config.window_size, config.window_stride);
    st.windows = static_cast<int>(window_plan.windows.size());
    const std::vector<ResidencyAction> residency =
        residency_plan(window_plan, config.effective_hot_capacity());
    const WeightProfile profile;

    const auto [positive, negative] =
        encode_prompts(*bundle.text_encoder, config.prompt, config.negative_embedding,
                       GuidanceConfig{config.guidance_scale, config.clip_skip_final_attention});

    for (size_t step = 0; step < plan.size(); ++step) {
        const Timestep t = plan.timesteps[step];
        const Timestep t_prev =
            step + 1 < plan.size() ? plan.timesteps[step + 1] : kCleanBoundary;
        const double abar_t = schedule.alpha_bar(t);

        OverlapAccumulator acc_pos(window_plan, profile, latent_shape.height, latent_shape.width,
                                   latent_shape.channels);
        OverlapAccumulator acc_neg(window_plan, profile, latent_shape.height, latent_shape.width,
                                   latent_shape.channels);

        std::set<int> hot;
        for (const ResidencyAction& action : residency) {
            switch (action.op) {
                case ResidencyOp::load:
                    hot.insert(action.frame);
                    st.peak_hot_frames =
                        std::max(st.peak_hot_frames, static_cast<int>(hot.size()));
                    require(static_cast<int>(hot.size()) <= config.effective_hot_capacity(),
                            ErrorKind::capacity, "hot tier exceeded its capacity");
                    break;
                case ResidencyOp::evict:
                    hot.erase(action.frame);
                    break;
                case ResidencyOp::evaluate: {
                    const size_t k = static_cast<size_t>(action.window_index);
                    const Window& window = window_plan.windows[k];
                    for (int f = window.l; f <= window.r; ++f) {
                        require(hot.contains(f), ErrorKind::contract,
                                "window evaluated with cold frame " + std::to_string(f));
                    }
                    const Tensor4 slice = latents.slice_frames(window.l - 1, window.length());
                    const std::vector<ControlSignal> control_slices =
                        detail::slice_controls(controls, window);
                    auto evaluate = [&](const PromptEmbedding& prompt) {
                        DenoiseRequest request{slice,   window,         t,
                                               abar_t,  prompt,         control_slices,
                                               config.temporal_mode};
                        Tensor4 out;
                        try {
                            out = bundle.denoiser->denoise(request);
                        } catch (const Error& e) {
                            if (e.kind() == ErrorKind::plugin) {
                                detail::rethrow_plugin_error(e, window, t);
                            }
                            throw;
                        }
                        ++st.denoiser_calls;
                        require(out.shape() == slice.shape(), ErrorKind::contract,
                                "denoiser output shape " + out.shape().str() +
                                    " does not match the latent slice " + slice.shape().str());
                        return out;
                    };
                    acc_pos.add(k, evaluate(positive));
                    acc_neg.add(k, evaluate(negative));
                    break;
                }
            }
        }

        const Tensor4 guided = apply_cfg(acc_pos.finalize(), acc_neg.finalize(),
                                         config.guidance_scale);
        latents = ddim_step(latents, guided, t, t_prev, schedule);
    }

    require(latents.all_finite(), ErrorKind::contract,
            "denoising produced non-finite latent values");
    return latents;
}

struct RenderJob {
    FrameVideo input;
    StageConfig main_stage;
    StageConfig editing_stage;
    ModelBundle main_bundle;
    ModelBundle editing_bundle;
    bool editing_enabled = false;
    std::string editing_prompt;
};

struct RenderResult {
    FrameVideo output;
    std::optional<FrameVideo> outline_video;  // main-stage structure control
    std::optional<FrameVideo> color_video;    // color source fed to the main stage
    std::optional<FrameVideo> editing_output;
    RunStats main_stats;
    std::optional<RunStats> editing_stats;
};

namespace detail {

inline const std::shared_ptr<ControlExtractor>& extractor_for(const ModelBundle& bundle,
                                                              ControlKind kind) {
    const auto it = bundle.extractors.find(kind);
    require(it != bundle.extractors.end() && it->second != nullptr, ErrorKind::parameter,
            std::string("bundle has no extractor for control '") + to_string(kind) + "'");
    return it->second;
}

}  // namespace detail

// Editing branch: image-to-image at reduced strength under depth/softedge
// structure guidance and cross-frame attention, then the deflickering
// post-processor. Returns the color video for the main stage.
inline FrameVideo run_editing(const RenderJob& job, RunStats* stats = nullptr) {
    require(job.editing_enabled, ErrorKind::parameter, "editing branch is disabled for this job");
    require(!job.editing_prompt.empty(), ErrorKind::parameter,
            "editing requires an editing prompt");
    validate_video(job.input);
    StageConfig cfg = job.editing_stage;
    cfg.prompt = job.editing_prompt;
    cfg.temporal_mode = TemporalMode::cross_frame_attention;
    const ModelBundle& bundle = job.editing_bundle;
    require(bundle.codec != nullptr, ErrorKind::parameter, "editing bundle needs a codec");

    const FrameVideo base = resize_video(job.input, cfg.height, cfg.width);
    const int frame_count = static_cast<int>(base.frames.size());

    std::vector<ControlSignal> controls;
    for (const auto& [kind, scale] : cfg.controls) {
        controls.push_back(
            ControlSignal{kind, detail::extractor_for(bundle, kind)->extract(base), scale});
    }

    const std::optional<Tensor4> initial =
        cfg.strength < 1.0 ? std::optional<Tensor4>(bundle.codec->encode(base)) : std::nullopt;
    const Tensor4 latents = denoise_stage(initial, frame_count, controls, cfg, bundle, stats);
    FrameVideo video = bundle.codec->decode(latents, job.input.fps);
    if (bundle.post_processor) video = bundle.post_processor->process(video);
    return video;
}

// Main toon shading stage. The color source is the input video unless the
// editing branch supplied its output.
inline FrameVideo run_main(const RenderJob& job,
                           const std::optional<FrameVideo>& editing_output,
                           RunStats* stats = nullptr,
                           std::optional<FrameVideo>* outline_video = nullptr,
                           std::optional<FrameVideo>* color_video = nullptr) {
    validate_video(job.input);
    if (job.editing_enabled) {
        require(editing_output.has_value(), ErrorKind::parameter,
                "editing is enabled but no editing output was provided");
    }
    StageConfig cfg = job.main_stage;
    cfg.temporal_mode = TemporalMode::motion_modules;
    const ModelBundle& bundle = job.main_bundle;
    require(bundle.codec != nullptr, ErrorKind::parameter, "main bundle needs a codec");

    const FrameVideo base = resize_video(job.input, cfg.height, cfg.width);
    const int frame_count = static_cast<int>(base.frames.size());

    // Editing output arrives at the editing resolution; bring it up to the
    // main grid before control extraction.
    const FrameVideo color_source =
        job.editing_enabled ? resize_video(*editing_output, cfg.height, cfg.width) : base;

    std::vector<ControlSignal> controls;
    for (const auto& [kind, scale] : cfg.controls) {
        const FrameVideo& source = kind == ControlKind::color ? color_source : base;
        Tensor4 frames = detail::extractor_for(bundle, kind)->extract(source);
        if (kind == ControlKind::outline && outline_video) {
            *outline_video = tensor_to_video(frames, job.input.fps);
        }
        controls.push_back(ControlSignal{kind, std::move(frames), scale});
    }
    if (color_video) *color_video = color_source;

    const std::optional<Tensor4> initial =
        cfg.strength < 1.0 ? std::optional<Tensor4>(bundle.codec->encode(base)) : std::nullopt;
    const Tensor4 latents = denoise_stage(initial, frame_count, controls, cfg, bundle, stats);
    return bundle.codec->decode(latents, job.input.fps);
}

// Editing branch (when enabled) feeding the main stage.
inline RenderResult run_full(const RenderJob& job) {
    RenderResult result;
    std::optional<FrameVideo> editing_output;
    if (job.editing_enabled) {
        RunStats editing_stats;
        editing_output = run_editing(job, &editing_stats);
        result.editing_stats = editing_stats;
        result.editing_output = editing_output;
    }
    result.output = run_main(job, editing_output, &result.main_stats, &result.outline_video,
                             &result.color_video);
    return result;
}

}  // namespace toonshade
