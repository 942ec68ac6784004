#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>

namespace toonshade {

// Counter-based random number generation (Philox-4x32-10).
//
// Every draw is a pure function of (seed, frame index, purpose tag, draw
// index), so per-frame noise is identical no matter in which order frames
// or elements are filled. Distinct purpose tags ("init", "renoise", ...)
// give decorrelated streams under the same seed.

namespace detail {

struct PhiloxBlock {
    uint32_t v[4];
};

inline PhiloxBlock philox4x32_10(uint32_t c0, uint32_t c1, uint32_t c2, uint32_t c3,
                                 uint32_t k0, uint32_t k1) {
    constexpr uint32_t m0 = 0xD2511F53u;
    constexpr uint32_t m1 = 0xCD9E8D57u;
    constexpr uint32_t w0 = 0x9E3779B9u;
    constexpr uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = static_cast<uint64_t>(m0) * c0;
        const uint64_t p1 = static_cast<uint64_t>(m1) * c2;
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
        const uint32_t lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
        const uint32_t lo1 = static_cast<uint32_t>(p1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
        k0 += w0;
        k1 += w1;
    }
    return PhiloxBlock{{c0, c1, c2, c3}};
}

inline uint32_t fnv1a32(std::string_view text) {
    uint32_t h = 0x811C9DC5u;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x01000193u;
    }
    return h;
}

}  // namespace detail

// One keyed stream: standard-normal values addressable by index.
class NormalStream {
public:
    NormalStream(uint64_t seed, uint32_t frame, uint32_t purpose_hash)
        : key0_(static_cast<uint32_t>(seed)),
          key1_(static_cast<uint32_t>(seed >> 32)),
          frame_(frame),
          purpose_(purpose_hash) {}

    // Random access: value at `index` is independent of any other draw.
    float normal_at(uint64_t index) const {
        const uint64_t block = index >> 2;
        const auto r = detail::philox4x32_10(static_cast<uint32_t>(block),
                                             static_cast<uint32_t>(block >> 32),
                                             frame_, purpose_, key0_, key1_);
        double z[4];
        box_muller(r.v[0], r.v[1], z[0], z[1]);
        box_muller(r.v[2], r.v[3], z[2], z[3]);
        return static_cast<float>(z[index & 3]);
    }

    void fill_normal(std::span<float> out, uint64_t start_index = 0) const {
        uint64_t i = start_index;
        size_t written = 0;
        // align to a block boundary, then emit 4 values per Philox call
        while (written < out.size() && (i & 3) != 0) {
            out[written++] = normal_at(i++);
        }
        while (written < out.size()) {
            const uint64_t block = i >> 2;
            const auto r = detail::philox4x32_10(static_cast<uint32_t>(block),
                                                 static_cast<uint32_t>(block >> 32),
                                                 frame_, purpose_, key0_, key1_);
            double z[4];
            box_muller(r.v[0], r.v[1], z[0], z[1]);
            box_muller(r.v[2], r.v[3], z[2], z[3]);
            for (int lane = 0; lane < 4 && written < out.size(); ++lane, ++i) {
                out[written++] = static_cast<float>(z[lane]);
            }
        }
    }

private:
    static void box_muller(uint32_t a, uint32_t b, double& z0, double& z1) {
        // u1 in (0,1] keeps the log finite; u2 in (0,1)
        const double u1 = (static_cast<double>(a) + 1.0) * 0x1p-32;
        const double u2 = (static_cast<double>(b) + 0.5) * 0x1p-32;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        z0 = radius * std::cos(angle);
        z1 = radius * std::sin(angle);
    }

    uint32_t key0_, key1_;
    uint32_t frame_;
    uint32_t purpose_;
};

class SeededRng {
public:
    explicit SeededRng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const noexcept { return seed_; }

    NormalStream stream(uint32_t frame, std::string_view purpose) const {
        return NormalStream(seed_, frame, detail::fnv1a32(purpose));
    }

private:
    uint64_t seed_;
};

}  // namespace toonshade
