#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "toonshade/errors.hpp"
#include "toonshade/models.hpp"
#include "toonshade/tensor_io.hpp"
#include "toonshade/toy_models.hpp"

namespace toonshade {

// Subprocess denoiser adapter. The engine talks to external model code
// exclusively through files in a per-call work directory:
//
//   latents.tnsr            window slice of latents
//   control_<kind>.tnsr     one per supplied control signal
//   prompt.tnsr             embedding, shape (1, tokens, 1, dim)
//   manifest.txt            key = value lines (timestep, alpha_bar,
//                           window_l/window_r, temporal_mode,
//                           conditioning_scale.<kind>, ...)
//
// The adapter process is invoked as `<command> <workdir>`, must write
// output.tnsr with the same shape as latents.tnsr, and exit 0. Any other
// exit code is surfaced as a plugin error together with captured stderr.

struct PluginManifest {
    std::string denoiser_command;
    int max_window = 32;
    bool reentrant = false;
};

inline PluginManifest load_plugin_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open plugin manifest " + path.string());
    PluginManifest manifest;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, ErrorKind::config,
                "plugin manifest line " + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "denoiser.command") {
            manifest.denoiser_command = value;
        } else if (key == "denoiser.max_window") {
            manifest.max_window = std::stoi(value);
        } else if (key == "denoiser.reentrant") {
            manifest.reentrant = (value == "true" || value == "1");
        } else {
            fail(ErrorKind::config, "plugin manifest line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        }
    }
    require(!manifest.denoiser_command.empty(), ErrorKind::config,
            "plugin manifest must set denoiser.command");
    require(manifest.max_window >= 1, ErrorKind::config,
            "denoiser.max_window must be positive");
    return manifest;
}

class SubprocessDenoiser : public Denoiser {
public:
    explicit SubprocessDenoiser(PluginManifest manifest) : manifest_(std::move(manifest)) {}

    Tensor4 denoise(const DenoiseRequest& request) override {
        const std::filesystem::path dir = make_work_dir();
        Tensor4 output;
        try {
            write_inputs(request, dir);
            run_adapter(dir);
            const auto out_path = dir / "output.tnsr";
            require(std::filesystem::exists(out_path), ErrorKind::plugin,
                    "plugin wrote no output.tnsr in " + dir.string());
            output = read_tensor_file(out_path);
            require(output.shape() == request.latents.shape(), ErrorKind::plugin,
                    "plugin output shape " + output.shape().str() +
                        " does not match the latent slice " + request.latents.shape().str());
        } catch (...) {
            std::error_code ec;
            std::filesystem::remove_all(dir, ec);
            throw;
        }
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
        return output;
    }

    int max_window() const override { return manifest_.max_window; }
    bool reentrant() const override { return manifest_.reentrant; }

private:
    static std::filesystem::path make_work_dir() {
        static std::atomic<uint64_t> counter{0};
        const auto dir = std::filesystem::temp_directory_path() /
                         ("toonshade-plugin-" + std::to_string(::getpid()) + "-" +
                          std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(dir);
        return dir;
    }

    void write_inputs(const DenoiseRequest& request, const std::filesystem::path& dir) const {
        write_tensor_file(request.latents, dir / "latents.tnsr");
        write_tensor_file(request.prompt.as_tensor(), dir / "prompt.tnsr");

        std::ostringstream manifest;
        manifest << "timestep = " << request.timestep << "\n";
        char abar[64];
        std::snprintf(abar, sizeof(abar), "%.17g", request.alpha_bar);
        manifest << "alpha_bar = " << abar << "\n";
        manifest << "window_l = " << request.window.l << "\n";
        manifest << "window_r = " << request.window.r << "\n";
        manifest << "temporal_mode = " << to_string(request.temporal_mode) << "\n";
        manifest << "prompt_tokens = " << request.prompt.token_count << "\n";
        for (const ControlSignal& control : request.controls) {
            const std::string kind = to_string(control.kind);
            write_tensor_file(control.frames, dir / ("control_" + kind + ".tnsr"));
            char scale[64];
            std::snprintf(scale, sizeof(scale), "%.17g", control.conditioning_scale);
            manifest << "control." << kind << " = control_" << kind << ".tnsr\n";
            manifest << "conditioning_scale." << kind << " = " << scale << "\n";
        }
        std::ofstream out(dir / "manifest.txt");
        require(out.good(), ErrorKind::io, "cannot write plugin manifest");
        out << manifest.str();
    }

    void run_adapter(const std::filesystem::path& dir) const {
        const auto stderr_path = dir / "stderr.txt";
        const std::string command = manifest_.denoiser_command + " '" + dir.string() + "' 2>'" +
                                    stderr_path.string() + "'";
        const int status = std::system(command.c_str());
        int exit_code = -1;
        if (status != -1 && WIFEXITED(status)) exit_code = WEXITSTATUS(status);
        if (exit_code == 0) return;

        std::string captured;
        std::ifstream err(stderr_path);
        if (err.good()) {
            std::ostringstream ss;
            ss << err.rdbuf();
            captured = ss.str();
        }
        std::string message = "plugin '" + manifest_.denoiser_command + "' exited with code " +
                              std::to_string(exit_code);
        if (!captured.empty()) message += "; stderr: " + captured;
        fail(ErrorKind::plugin, message);
    }

    PluginManifest manifest_;
};

// Bundle with the denoiser slot backed by the external adapter and every
// other slot filled by the toys.
inline ModelBundle make_plugin_bundle(const PluginManifest& manifest, bool editing_stage = false) {
    ModelBundle bundle = make_toy_bundle(editing_stage);
    bundle.denoiser = std::make_shared<SubprocessDenoiser>(manifest);
    return bundle;
}

}  // namespace toonshade
