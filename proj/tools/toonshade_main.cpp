// toonshade CLI: render video frame directories through the two-stage
// sliding-window diffusion engine, score temporal consistency, and inspect
// resolved configurations.
//
// Exit codes: 0 success, 2 config/input error, 3 plugin error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "toonshade/toonshade.hpp"

namespace fs = std::filesystem;
using namespace toonshade;

namespace {

struct RenderOptions {
    std::string input_dir;
    std::string output_dir;
    std::string config_file;
    uint64_t seed = 0;
    std::string edit_prompt;
    bool keep_intermediate = false;
    bool toy_models = false;
    std::string plugin_manifest;
};

EngineConfig load_config(const std::string& path) {
    EngineConfig cfg = path.empty() ? default_config() : parse_config_file(path);
    validate_config(cfg);
    return cfg;
}

std::optional<fs::path> negative_embedding_path(const EngineConfig& cfg) {
    if (cfg.io.negative_embedding.empty()) return std::nullopt;
    return fs::path(cfg.io.negative_embedding);
}

void print_stage_stats(const char* name, const RunStats& stats) {
    std::printf("%s.windows = %d\n", name, stats.windows);
    std::printf("%s.timesteps = %d\n", name, stats.timesteps);
    std::printf("%s.denoiser_calls = %ld\n", name, stats.denoiser_calls);
    std::printf("%s.peak_hot_frames = %d\n", name, stats.peak_hot_frames);
}

int cmd_render(const RenderOptions& opt) {
    const EngineConfig cfg = load_config(opt.config_file);

    RenderJob job;
    job.input = load_frames(opt.input_dir, R"((\d+)\.png)", cfg.io.fps);
    job.editing_enabled = !opt.edit_prompt.empty();
    job.editing_prompt = opt.edit_prompt;
    job.main_stage = StageConfig::from_file_settings(cfg.main, TemporalMode::motion_modules,
                                                     opt.seed, cfg.io.positive_prompt,
                                                     negative_embedding_path(cfg));
    job.editing_stage = StageConfig::from_file_settings(
        cfg.editing, TemporalMode::cross_frame_attention, opt.seed, cfg.io.positive_prompt,
        negative_embedding_path(cfg));

    if (!opt.plugin_manifest.empty()) {
        const PluginManifest manifest = load_plugin_manifest(opt.plugin_manifest);
        job.main_bundle = make_plugin_bundle(manifest, /*editing_stage=*/false);
        job.editing_bundle = make_plugin_bundle(manifest, /*editing_stage=*/true);
    } else {
        job.main_bundle = make_toy_bundle(/*editing_stage=*/false);
        job.editing_bundle = make_toy_bundle(/*editing_stage=*/true);
    }

    const RenderResult result = run_full(job);
    save_frames(result.output, opt.output_dir);
    if (opt.keep_intermediate) {
        const fs::path inter = fs::path(opt.output_dir) / "intermediate";
        if (result.outline_video) save_frames(*result.outline_video, inter / "outline");
        if (result.color_video) save_frames(*result.color_video, inter / "color");
    }

    std::printf("frames = %zu\n", result.output.frames.size());
    if (result.editing_stats) print_stage_stats("editing", *result.editing_stats);
    print_stage_stats("main", result.main_stats);
    return 0;
}

int cmd_metrics(const std::string& video_dir, const std::string& flow_dir) {
    const FrameVideo video = load_frames(video_dir);
    require(video.frames.size() >= 2, ErrorKind::insufficient_input,
            "pixel_mse needs at least 2 frames, got " + std::to_string(video.frames.size()));
    const std::vector<FlowField> flows =
        load_flow_dir(flow_dir, static_cast<int>(video.frames.size()));
    std::printf("pixel_mse = %.6f\n", pixel_mse(video, flows));
    return 0;
}

int cmd_inspect_config(const std::string& config_file) {
    const EngineConfig cfg = load_config(config_file);
    std::fputs(print_config(cfg).c_str(), stdout);
    return 0;
}

int exit_code_for(ErrorKind kind) {
    return kind == ErrorKind::plugin ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window latent diffusion toon shading engine"};
    app.require_subcommand(1);

    RenderOptions render_opt;
    CLI::App* render = app.add_subcommand("render", "Render a frame directory");
    render->add_option("--input", render_opt.input_dir, "Input PNG frame directory")->required();
    render->add_option("--output", render_opt.output_dir, "Output frame directory")->required();
    render->add_option("--config", render_opt.config_file, "Config file (defaults when absent)");
    render->add_option("--seed", render_opt.seed, "Render seed")->default_val(0);
    render->add_option("--edit-prompt", render_opt.edit_prompt,
                       "Enable the editing branch with this prompt");
    render->add_flag("--keep-intermediate", render_opt.keep_intermediate,
                     "Persist outline/color intermediates");
    auto* toy = render->add_flag("--toy-models", render_opt.toy_models,
                                 "Use the built-in deterministic toy models (default)");
    render->add_option("--plugin", render_opt.plugin_manifest, "Plugin manifest file")
        ->excludes(toy);

    std::string metrics_video, metrics_flows;
    CLI::App* metrics = app.add_subcommand("metrics", "Flow-warped pixel MSE of a video");
    metrics->add_option("--video", metrics_video, "Frame directory")->required();
    metrics->add_option("--flows", metrics_flows, "Flow file directory")->required();

    std::string inspect_file;
    CLI::App* inspect =
        app.add_subcommand("inspect-config", "Print the fully resolved configuration");
    inspect->add_option("--config", inspect_file, "Config file (defaults when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (render->parsed()) return cmd_render(render_opt);
        if (metrics->parsed()) return cmd_metrics(metrics_video, metrics_flows);
        if (inspect->parsed()) return cmd_inspect_config(inspect_file);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
