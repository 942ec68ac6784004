#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/tensor.hpp"

namespace toonshade {

// Sliding windows over the frame axis. Indices are 1-based inclusive,
// matching how the rest of the engine reports frames to users.
struct Window {
    int l = 1;
    int r = 1;

    int length() const noexcept { return r - l + 1; }
    bool contains(int i) const noexcept { return l <= i && i <= r; }
    bool operator==(const Window&) const = default;
};

struct WeightProfile {
    double epsilon = 1e-2;  // minimum weight of tailed frames
};

struct WindowPlan {
    int frame_count = 0;
    int size = 0;    // d
    int stride = 0;  // s
    std::vector<Window> windows;
};

// Windows start at every frame index congruent to 1 modulo the stride and
// are clamped to the video end. stride < size guarantees overlap, hence
// full coverage and smooth transitions between neighbouring windows.
inline WindowPlan enumerate_windows(int frame_count, int size, int stride) {
    require(frame_count >= 1, ErrorKind::parameter, "frame count must be positive");
    require(stride >= 1, ErrorKind::parameter, "window stride must be positive");
    require(stride < size, ErrorKind::parameter,
            "window stride must be smaller than window size (s<d), got s=" +
                std::to_string(stride) + ", d=" + std::to_string(size));
    WindowPlan plan;
    plan.frame_count = frame_count;
    plan.size = size;
    plan.stride = stride;
    for (int start = 1; start <= frame_count; start += stride) {
        plan.windows.push_back(Window{start, std::min(start + size - 1, frame_count)});
    }
    return plan;
}

// Triangular blending weight: 1+eps at the window center, eps at the tails,
// 0 outside. A singular one-frame window keeps the center value.
inline double frame_weight(const Window& window, int i, const WeightProfile& profile = {}) {
    if (!window.contains(i)) return 0.0;
    if (window.r == window.l) return 1.0 + profile.epsilon;
    const double mid = (window.l + window.r) / 2.0;
    const double half = (window.r - window.l) / 2.0;
    // grouped so the tail weight is exactly eps and the center exactly 1+eps
    return (1.0 - std::abs(i - mid) / half) + profile.epsilon;
}

// Normalized blending of per-window denoiser outputs into one full-length
// tensor. Slices may be added in any order; the reduction always runs in
// window-index order, so results are bit-stable regardless of how the
// evaluations were scheduled.
class OverlapAccumulator {
public:
    OverlapAccumulator(const WindowPlan& plan, WeightProfile profile, int64_t height,
                       int64_t width, int64_t channels)
        : plan_(plan),
          profile_(profile),
          per_frame_{1, height, width, channels},
          slices_(plan.windows.size()) {}

    void add(size_t window_index, Tensor4 slice) {
        require(window_index < plan_.windows.size(), ErrorKind::parameter,
                "window index out of range");
        const Window& w = plan_.windows[window_index];
        const Shape4 expected{w.length(), per_frame_.height, per_frame_.width,
                              per_frame_.channels};
        require(slice.shape() == expected, ErrorKind::shape,
                "window [" + std::to_string(w.l) + "," + std::to_string(w.r) +
                    "] slice has shape " + slice.shape().str() + ", expected " + expected.str());
        slices_[window_index] = std::move(slice);
    }

    Tensor4 finalize() const {
        for (size_t k = 0; k < slices_.size(); ++k) {
            if (!slices_[k].has_value()) {
                const Window& w = plan_.windows[k];
                fail(ErrorKind::completeness,
                     "missing output for window " + std::to_string(k + 1) + " [" +
                         std::to_string(w.l) + "," + std::to_string(w.r) + "]");
            }
        }
        const int64_t fsz = per_frame_.frame_size();
        const int64_t n = plan_.frame_count;
        std::vector<double> acc(static_cast<size_t>(n * fsz), 0.0);
        std::vector<double> weight_sum(static_cast<size_t>(n), 0.0);
        for (size_t k = 0; k < slices_.size(); ++k) {
            const Window& w = plan_.windows[k];
            const Tensor4& slice = *slices_[k];
            for (int i = w.l; i <= w.r; ++i) {
                const double wt = frame_weight(w, i, profile_);
                weight_sum[static_cast<size_t>(i - 1)] += wt;
                auto src = slice.frame(i - w.l);
                double* dst = acc.data() + static_cast<size_t>((i - 1) * fsz);
                for (int64_t j = 0; j < fsz; ++j) dst[j] += wt * static_cast<double>(src[j]);
            }
        }
        Tensor4 out({n, per_frame_.height, per_frame_.width, per_frame_.channels});
        auto os = out.values();
        for (int64_t i = 0; i < n; ++i) {
            const double denom = weight_sum[static_cast<size_t>(i)];
            require(denom > 0.0, ErrorKind::completeness,
                    "frame " + std::to_string(i + 1) + " is not covered by any window");
            for (int64_t j = 0; j < fsz; ++j) {
                os[static_cast<size_t>(i * fsz + j)] =
                    static_cast<float>(acc[static_cast<size_t>(i * fsz + j)] / denom);
            }
        }
        return out;
    }

private:
    WindowPlan plan_;
    WeightProfile profile_;
    Shape4 per_frame_;
    std::vector<std::optional<Tensor4>> slices_;
};

inline Tensor4 aggregate(const WindowPlan& plan, const WeightProfile& profile,
                         std::vector<Tensor4> window_outputs) {
    require(window_outputs.size() == plan.windows.size(), ErrorKind::completeness,
            "expected " + std::to_string(plan.windows.size()) + " window outputs, got " +
                std::to_string(window_outputs.size()));
    require(!window_outputs.empty(), ErrorKind::completeness, "no window outputs");
    const auto& s = window_outputs.front().shape();
    OverlapAccumulator acc(plan, profile, s.height, s.width, s.channels);
    for (size_t k = 0; k < window_outputs.size(); ++k) acc.add(k, std::move(window_outputs[k]));
    return acc.finalize();
}

// Two-tier residency: per-frame latents live in a cheap cold store and are
// staged into a bounded hot tier only while a window that needs them is
// being evaluated.
enum class ResidencyOp { load, evict, evaluate };

struct ResidencyAction {
    ResidencyOp op;
    int frame = 0;         // load / evict
    int window_index = 0;  // evaluate (0-based into plan.windows)
};

// Action sequence such that every window's frames are hot when it is
// evaluated, at most `hot_capacity` frames are hot at any point, and every
// frame is evicted right after its last covering window.
inline std::vector<ResidencyAction> residency_plan(const WindowPlan& plan, int hot_capacity) {
    require(hot_capacity >= plan.size, ErrorKind::capacity,
            "hot capacity " + std::to_string(hot_capacity) +
                " is smaller than the window size " + std::to_string(plan.size));

    std::vector<int> last_cover(static_cast<size_t>(plan.frame_count) + 1, -1);
    for (size_t k = 0; k < plan.windows.size(); ++k) {
        for (int f = plan.windows[k].l; f <= plan.windows[k].r; ++f) {
            last_cover[static_cast<size_t>(f)] = static_cast<int>(k);
        }
    }

    std::vector<ResidencyAction> actions;
    std::vector<int> hot;  // sorted frame indices
    int hot_count = 0;
    for (size_t k = 0; k < plan.windows.size(); ++k) {
        // retire frames whose last covering window has passed
        for (auto it = hot.begin(); it != hot.end();) {
            if (last_cover[static_cast<size_t>(*it)] < static_cast<int>(k)) {
                actions.push_back({ResidencyOp::evict, *it, 0});
                --hot_count;
                it = hot.erase(it);
            } else {
                ++it;
            }
        }
        const Window& w = plan.windows[k];
        for (int f = w.l; f <= w.r; ++f) {
            if (std::find(hot.begin(), hot.end(), f) == hot.end()) {
                actions.push_back({ResidencyOp::load, f, 0});
                hot.push_back(f);
                ++hot_count;
                require(hot_count <= hot_capacity, ErrorKind::capacity,
                        "residency plan exceeded hot capacity");
            }
        }
        actions.push_back({ResidencyOp::evaluate, 0, static_cast<int>(k)});
    }
    for (int f : hot) actions.push_back({ResidencyOp::evict, f, 0});
    return actions;
}

}  // namespace toonshade
