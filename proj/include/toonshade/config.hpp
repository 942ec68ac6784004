#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/image.hpp"
#include "toonshade/models.hpp"

namespace toonshade {

// Flat `key = value` config file with [main], [editing], [fastblend] and
// [io] sections. Missing keys take the documented defaults; unknown keys
// are rejected. Full-line # comments only, so prompts may contain '#'.

struct StageFileSettings {
    int frame_height = 0;
    int frame_width = 0;
    double cfg_scale = 7.0;
    double denoising_strength = 1.0;
    int inference_steps = 10;
    int window_size = 16;
    int window_stride = 8;
    std::vector<std::pair<ControlKind, double>> conditioning;  // fixed per-stage kinds
};

struct IoSettings {
    Fps fps;
    std::string positive_prompt = "best quality, perfect anime illustration";
    std::string negative_embedding;  // path to a tensor file; empty = zero embedding
};

struct EngineConfig {
    StageFileSettings main;
    StageFileSettings editing;
    FastBlendConfig fastblend;
    IoSettings io;
};

inline EngineConfig default_config() {
    EngineConfig cfg;
    cfg.main.frame_height = 1536;
    cfg.main.frame_width = 1536;
    cfg.main.cfg_scale = 7.0;
    cfg.main.denoising_strength = 1.0;
    cfg.main.inference_steps = 10;
    cfg.main.window_size = 16;
    cfg.main.window_stride = 8;
    cfg.main.conditioning = {{ControlKind::outline, 0.5}, {ControlKind::color, 0.5}};

    cfg.editing.frame_height = 512;
    cfg.editing.frame_width = 512;
    cfg.editing.cfg_scale = 7.0;
    cfg.editing.denoising_strength = 0.9;
    cfg.editing.inference_steps = 20;
    cfg.editing.window_size = 8;
    cfg.editing.window_stride = 4;
    cfg.editing.conditioning = {{ControlKind::depth, 0.5}, {ControlKind::softedge, 0.5}};
    return cfg;
}

namespace detail {

// Shortest decimal that parses back to exactly the same double.
inline std::string format_real(double v) {
    char buf[64];
    for (int precision : {15, 16, 17}) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct ConfigParser {
    std::string source_name;
    int line_no = 0;

    [[noreturn]] void error(const std::string& message) const {
        fail(ErrorKind::config,
             source_name + ":" + std::to_string(line_no) + ": " + message);
    }

    int parse_int(const std::string& key, const std::string& value) const {
        try {
            size_t pos = 0;
            const int v = std::stoi(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            error("key '" + key + "': expected an integer, got '" + value + "'");
        }
    }

    double parse_real(const std::string& key, const std::string& value) const {
        try {
            size_t pos = 0;
            const double v = std::stod(value, &pos);
            if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            error("key '" + key + "': expected a number, got '" + value + "'");
        }
    }

    bool parse_tracking(const std::string& key, const std::string& value) const {
        if (value == "enabled" || value == "true") return true;
        if (value == "disabled" || value == "false") return false;
        error("key '" + key + "': expected enabled/disabled, got '" + value + "'");
    }

    Fps parse_fps(const std::string& key, const std::string& value) const {
        const auto slash = value.find('/');
        Fps fps;
        if (slash == std::string::npos) {
            fps.num = static_cast<uint32_t>(parse_int(key, value));
            fps.den = 1;
        } else {
            fps.num = static_cast<uint32_t>(parse_int(key, value.substr(0, slash)));
            fps.den = static_cast<uint32_t>(parse_int(key, value.substr(slash + 1)));
        }
        if (fps.num == 0 || fps.den == 0) error("key '" + key + "': fps must be positive");
        return fps;
    }
};

inline bool apply_stage_key(StageFileSettings& stage, const ConfigParser& p,
                            const std::string& key, const std::string& value) {
    if (key == "frame_height") {
        stage.frame_height = p.parse_int(key, value);
    } else if (key == "frame_width") {
        stage.frame_width = p.parse_int(key, value);
    } else if (key == "cfg_scale") {
        stage.cfg_scale = p.parse_real(key, value);
    } else if (key == "denoising_strength") {
        stage.denoising_strength = p.parse_real(key, value);
    } else if (key == "inference_steps") {
        stage.inference_steps = p.parse_int(key, value);
    } else if (key == "window_size") {
        stage.window_size = p.parse_int(key, value);
    } else if (key == "window_stride") {
        stage.window_stride = p.parse_int(key, value);
    } else if (key.rfind("conditioning_scale.", 0) == 0) {
        const std::string kind_name = key.substr(std::string("conditioning_scale.").size());
        for (auto& [kind, scale] : stage.conditioning) {
            if (kind_name == to_string(kind)) {
                scale = p.parse_real(key, value);
                return true;
            }
        }
        return false;  // a kind this stage does not use -> unknown key
    } else {
        return false;
    }
    return true;
}

}  // namespace detail

inline EngineConfig parse_config_text(std::string_view text, const std::string& source_name) {
    EngineConfig cfg = default_config();
    detail::ConfigParser p{source_name};
    std::string section;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++p.line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') p.error("unterminated section header");
            section = stripped.substr(1, stripped.size() - 2);
            if (section != "main" && section != "editing" && section != "fastblend" &&
                section != "io") {
                p.error("unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) p.error("expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) p.error("empty key");
        if (section.empty()) p.error("key '" + key + "' appears before any section header");

        bool known = false;
        if (section == "main") {
            known = detail::apply_stage_key(cfg.main, p, key, value);
        } else if (section == "editing") {
            known = detail::apply_stage_key(cfg.editing, p, key, value);
        } else if (section == "fastblend") {
            known = true;
            if (key == "inference_mode") {
                cfg.fastblend.inference_mode = value;
            } else if (key == "sliding_window_size") {
                cfg.fastblend.sliding_window_size = p.parse_int(key, value);
            } else if (key == "batch_size") {
                cfg.fastblend.batch_size = p.parse_int(key, value);
            } else if (key == "tracking") {
                cfg.fastblend.tracking = p.parse_tracking(key, value);
            } else if (key == "patch_size") {
                cfg.fastblend.patch_size = p.parse_int(key, value);
            } else if (key == "iterations") {
                cfg.fastblend.iterations = p.parse_int(key, value);
            } else if (key == "guide_weight") {
                cfg.fastblend.guide_weight = p.parse_real(key, value);
            } else {
                known = false;
            }
        } else if (section == "io") {
            known = true;
            if (key == "fps") {
                cfg.io.fps = p.parse_fps(key, value);
            } else if (key == "positive_prompt") {
                cfg.io.positive_prompt = value;
            } else if (key == "negative_embedding") {
                cfg.io.negative_embedding = value;
            } else {
                known = false;
            }
        }
        if (!known) p.error("unknown key '" + key + "' in section [" + section + "]");
    }
    return cfg;
}

inline EngineConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::config, "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.filename().string());
}

inline void validate_stage_settings(const StageFileSettings& stage, const std::string& section) {
    auto check = [&](bool ok, const std::string& message) {
        require(ok, ErrorKind::config, "[" + section + "] " + message);
    };
    check(stage.frame_height > 0 && stage.frame_height % 8 == 0,
          "frame_height must be a positive multiple of 8, got " +
              std::to_string(stage.frame_height));
    check(stage.frame_width > 0 && stage.frame_width % 8 == 0,
          "frame_width must be a positive multiple of 8, got " +
              std::to_string(stage.frame_width));
    check(std::isfinite(stage.cfg_scale), "cfg_scale must be finite");
    check(stage.denoising_strength >= 0.0 && stage.denoising_strength <= 1.0,
          "denoising_strength must be in [0, 1]");
    check(stage.inference_steps >= 1 && stage.inference_steps <= 1000,
          "inference_steps must be in [1, 1000]");
    check(stage.window_size >= 2, "window_size must be at least 2");
    check(stage.window_stride >= 1, "window_stride must be positive");
    check(stage.window_stride < stage.window_size,
          "window_stride must be smaller than window_size (s<d), got window_stride=" +
              std::to_string(stage.window_stride) + ", window_size=" +
              std::to_string(stage.window_size));
    for (const auto& [kind, scale] : stage.conditioning) {
        check(scale >= 0.0 && scale <= 1.0, "conditioning_scale." + std::string(to_string(kind)) +
                                                " must be in [0, 1]");
    }
}

inline void validate_config(const EngineConfig& cfg) {
    validate_stage_settings(cfg.main, "main");
    validate_stage_settings(cfg.editing, "editing");
    require(cfg.fastblend.sliding_window_size >= 1 && cfg.fastblend.batch_size >= 1 &&
                cfg.fastblend.patch_size >= 1 && cfg.fastblend.iterations >= 1,
            ErrorKind::config, "[fastblend] sizes and iterations must be positive");
    require(std::isfinite(cfg.fastblend.guide_weight), ErrorKind::config,
            "[fastblend] guide_weight must be finite");
}

// Canonical resolved form: fixed section and key order, shortest
// round-trip numbers. parse(print(parse(f))) == parse(f).
inline std::string print_config(const EngineConfig& cfg) {
    std::ostringstream out;
    auto stage = [&](const char* name, const StageFileSettings& s) {
        out << "[" << name << "]\n";
        out << "frame_height = " << s.frame_height << "\n";
        out << "frame_width = " << s.frame_width << "\n";
        out << "cfg_scale = " << detail::format_real(s.cfg_scale) << "\n";
        out << "denoising_strength = " << detail::format_real(s.denoising_strength) << "\n";
        out << "inference_steps = " << s.inference_steps << "\n";
        out << "window_size = " << s.window_size << "\n";
        out << "window_stride = " << s.window_stride << "\n";
        for (const auto& [kind, scale] : s.conditioning) {
            out << "conditioning_scale." << to_string(kind) << " = "
                << detail::format_real(scale) << "\n";
        }
    };
    stage("main", cfg.main);
    out << "\n";
    stage("editing", cfg.editing);
    out << "\n[fastblend]\n";
    out << "inference_mode = " << cfg.fastblend.inference_mode << "\n";
    out << "sliding_window_size = " << cfg.fastblend.sliding_window_size << "\n";
    out << "batch_size = " << cfg.fastblend.batch_size << "\n";
    out << "tracking = " << (cfg.fastblend.tracking ? "enabled" : "disabled") << "\n";
    out << "patch_size = " << cfg.fastblend.patch_size << "\n";
    out << "iterations = " << cfg.fastblend.iterations << "\n";
    out << "guide_weight = " << detail::format_real(cfg.fastblend.guide_weight) << "\n";
    out << "\n[io]\n";
    out << "fps = " << cfg.io.fps.num;
    if (cfg.io.fps.den != 1) out << "/" << cfg.io.fps.den;
    out << "\n";
    out << "positive_prompt = " << cfg.io.positive_prompt << "\n";
    out << "negative_embedding =";
    if (!cfg.io.negative_embedding.empty()) out << " " << cfg.io.negative_embedding;
    out << "\n";
    return out.str();
}

}  // namespace toonshade
