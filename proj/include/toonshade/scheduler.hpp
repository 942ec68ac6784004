#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toonshade/errors.hpp"
#include "toonshade/rng.hpp"
#include "toonshade/tensor.hpp"

namespace toonshade {

using Timestep = int32_t;

// Virtual "clean" end of the schedule: cumulative retention exactly 1, so
// the final DDIM update returns the predicted clean latent.
inline constexpr Timestep kCleanBoundary = -1;

// Cumulative signal-retention coefficients, indexed by training timestep.
class NoiseSchedule {
public:
    NoiseSchedule(int num_train_steps, std::vector<double> alpha_bar)
        : num_train_steps_(num_train_steps), alpha_bar_(std::move(alpha_bar)) {
        require(num_train_steps_ >= 1, ErrorKind::parameter, "num_train_steps must be positive");
        require(static_cast<int>(alpha_bar_.size()) == num_train_steps_, ErrorKind::parameter,
                "alpha_bar length must equal num_train_steps");
        double prev = 1.0;
        for (double v : alpha_bar_) {
            require(v > 0.0 && v <= 1.0, ErrorKind::parameter, "alpha_bar values must be in (0,1]");
            require(v < prev, ErrorKind::parameter, "alpha_bar must be strictly decreasing");
            prev = v;
        }
    }

    // Square-root-interpolated ("scaled linear") beta schedule; the
    // convention of the Stable Diffusion family of backbones.
    static NoiseSchedule scaled_linear(int num_train_steps = 1000, double beta_start = 0.00085,
                                       double beta_end = 0.012) {
        require(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0,
                ErrorKind::parameter, "beta range must satisfy 0 < beta_start <= beta_end < 1");
        require(num_train_steps >= 1, ErrorKind::parameter, "num_train_steps must be positive");
        const double s0 = std::sqrt(beta_start);
        const double s1 = std::sqrt(beta_end);
        std::vector<double> bars(static_cast<size_t>(num_train_steps));
        double product = 1.0;
        for (int t = 0; t < num_train_steps; ++t) {
            const double frac =
                num_train_steps > 1 ? static_cast<double>(t) / (num_train_steps - 1) : 0.0;
            const double root = s0 + frac * (s1 - s0);
            const double beta = root * root;
            product *= 1.0 - beta;
            bars[static_cast<size_t>(t)] = product;
        }
        return NoiseSchedule(num_train_steps, std::move(bars));
    }

    int num_train_steps() const noexcept { return num_train_steps_; }

    double alpha_bar(Timestep t) const {
        if (t == kCleanBoundary) return 1.0;
        require(t >= 0 && t < num_train_steps_, ErrorKind::parameter,
                "timestep " + std::to_string(t) + " outside [0, " +
                    std::to_string(num_train_steps_) + ")");
        return alpha_bar_[static_cast<size_t>(t)];
    }

private:
    int num_train_steps_;
    std::vector<double> alpha_bar_;
};

// Inference plan: a uniformly spaced descending ladder of `inference_steps`
// training timesteps, truncated to its low-noise tail by the denoising
// strength. strength 1 runs the whole ladder, strength 0 runs nothing.
struct TimestepPlan {
    int inference_steps = 0;
    double strength = 1.0;
    std::vector<Timestep> timesteps;  // strictly decreasing

    bool empty() const noexcept { return timesteps.empty(); }
    size_t size() const noexcept { return timesteps.size(); }
};

inline TimestepPlan plan_timesteps(const NoiseSchedule& schedule, int inference_steps,
                                   double strength) {
    require(inference_steps >= 1 && inference_steps <= schedule.num_train_steps(),
            ErrorKind::parameter, "inference_steps must be in [1, num_train_steps]");
    require(strength >= 0.0 && strength <= 1.0, ErrorKind::parameter,
            "denoising strength must be in [0, 1]");

    const int64_t n = schedule.num_train_steps();
    std::vector<Timestep> ladder(static_cast<size_t>(inference_steps));
    for (int k = inference_steps - 1, i = 0; k >= 0; --k, ++i) {
        // ceil((k+1)*n / T) - 1, spacing that reaches the high-noise end
        const int64_t t = (static_cast<int64_t>(k + 1) * n + inference_steps - 1) /
                              inference_steps - 1;
        ladder[static_cast<size_t>(i)] = static_cast<Timestep>(t);
    }

    // Truncation keeps the plan a pure suffix of the full ladder. The tiny
    // epsilon absorbs binary representation error in T*strength (e.g.
    // 10*0.7 = 6.999...) without changing exact-integer products.
    const int keep = static_cast<int>(std::floor(inference_steps * strength + 1e-9));
    TimestepPlan plan;
    plan.inference_steps = inference_steps;
    plan.strength = strength;
    plan.timesteps.assign(ladder.end() - keep, ladder.end());
    return plan;
}

// Forward diffusion: sqrt(abar_t)*x0 + sqrt(1-abar_t)*noise.
inline Tensor4 add_noise(const Tensor4& x0, const Tensor4& noise, Timestep t,
                         const NoiseSchedule& schedule) {
    const double abar = schedule.alpha_bar(t);
    return lincomb(std::sqrt(abar), x0, std::sqrt(1.0 - abar), noise);
}

// One deterministic DDIM update from timestep t to the less noisy t_prev
// (kCleanBoundary for the final step):
//   x_prev = sqrt(abar_prev) * (x_t - sqrt(1-abar_t)*e) / sqrt(abar_t)
//          + sqrt(1-abar_prev) * e
inline Tensor4 ddim_step(const Tensor4& x_t, const Tensor4& noise_pred, Timestep t,
                         Timestep t_prev, const NoiseSchedule& schedule) {
    const double abar_t = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t_prev);
    require(abar_t > 0.0, ErrorKind::parameter, "alpha_bar(t) must be positive");
    require(abar_prev >= abar_t, ErrorKind::parameter,
            "t_prev must be the less noisy timestep (alpha_bar(t_prev) >= alpha_bar(t))");
    const double ratio = std::sqrt(abar_prev / abar_t);
    const double noise_coeff =
        std::sqrt(1.0 - abar_prev) - ratio * std::sqrt(1.0 - abar_t);
    return lincomb(ratio, x_t, noise_coeff, noise_pred);
}

// Standard-normal tensor with one keyed stream per frame; the result is a
// pure function of (seed, purpose) and never of fill order.
inline Tensor4 sample_normal(Shape4 shape, const SeededRng& rng, std::string_view purpose) {
    Tensor4 out(shape);
    for (int64_t f = 0; f < shape.frames; ++f) {
        rng.stream(static_cast<uint32_t>(f), purpose).fill_normal(out.frame(f));
    }
    return out;
}

inline Tensor4 init_noise(Shape4 shape, const SeededRng& rng) {
    return sample_normal(shape, rng, "init");
}

}  // namespace toonshade
