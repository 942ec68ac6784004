#include <cmath>
#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "toonshade/toy_models.hpp"

using namespace toonshade;
using Catch::Matchers::WithinAbs;

namespace {

const PromptEmbedding kPrompt = PromptEmbedding::zero_tokens(2, 4);

Tensor4 random_tensor(Shape4 shape, uint32_t seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<float> dist(-1.5f, 1.5f);
    Tensor4 t(shape);
    for (auto& v : t.values()) v = dist(gen);
    return t;
}

Tensor4 run(Denoiser& denoiser, const Tensor4& latents_slice, Window window,
            std::span<const ControlSignal> controls = {}, Timestep t = 500,
            double abar = 0.25) {
    DenoiseRequest request{latents_slice, window,   t, abar, kPrompt, controls,
                           TemporalMode::none};
    return denoiser.denoise(request);
}

}  // namespace

TEST_CASE("oracle denoiser returns the stored noise slice for any window") {
    const Tensor4 noise = random_tensor({8, 2, 2, 3}, 7);
    ToyOracleDenoiser oracle{Tensor4(noise)};
    const Window window{3, 6};
    const Tensor4 slice = noise.slice_frames(2, 4);
    const Tensor4 out = run(oracle, slice, window);
    REQUIRE(out.shape() == slice.shape());
    for (int f = 0; f < 4; ++f) {
        CHECK(out.at(f, 0, 0, 0) == noise.at(f + 2, 0, 0, 0));
    }
    // purity: identical calls give identical bits
    const Tensor4 again = run(oracle, slice, window);
    CHECK(std::equal(out.values().begin(), out.values().end(), again.values().begin()));
}

TEST_CASE("oracle denoiser rejects windows outside the stored range") {
    ToyOracleDenoiser oracle{random_tensor({4, 2, 2, 1}, 9)};
    const Tensor4 slice = random_tensor({3, 2, 2, 1}, 10);
    try {
        run(oracle, slice, Window{3, 5});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::contract);
    }
}

TEST_CASE("frame-local denoiser applies its affine map") {
    const Tensor4 slice = random_tensor({4, 2, 2, 2}, 11);
    ToyFrameLocalDenoiser identity(1.0, 0.0);
    const Tensor4 same = run(identity, slice, Window{1, 4});
    CHECK(std::equal(same.values().begin(), same.values().end(), slice.values().begin()));

    ToyFrameLocalDenoiser constant(0.0, 2.5);
    const Tensor4 c = run(constant, slice, Window{1, 4});
    for (float v : c.values()) CHECK(v == 2.5f);

    ToyFrameLocalDenoiser affine(0.5, -1.0);
    const Tensor4 mapped = run(affine, slice, Window{1, 4});
    for (size_t i = 0; i < mapped.values().size(); ++i) {
        CHECK_THAT(mapped.values()[i], WithinAbs(0.5 * slice.values()[i] - 1.0, 1e-6));
    }
}

TEST_CASE("control echo denoiser reproduces scaled control mixes") {
    ToyControlEchoDenoiser echo;
    const Tensor4 slice = random_tensor({2, 4, 4, 4}, 12);

    const Tensor4 silent = run(echo, slice, Window{1, 2});
    for (float v : silent.values()) CHECK(v == 0.0f);

    std::vector<ControlSignal> one;
    one.push_back({ControlKind::outline, Tensor4::full({2, 8, 8, 1}, 1.0f), 0.5});
    const Tensor4 half = run(echo, slice, Window{1, 2}, one);
    for (float v : half.values()) CHECK_THAT(v, WithinAbs(0.5, 1e-7));

    std::vector<ControlSignal> two;
    Tensor4 u = random_tensor({2, 4, 4, 4}, 13);
    Tensor4 v = random_tensor({2, 4, 4, 4}, 14);
    two.push_back({ControlKind::outline, u, 0.5});
    two.push_back({ControlKind::color, v, 0.5});
    const Tensor4 mixed = run(echo, slice, Window{1, 2}, two);
    for (size_t i = 0; i < mixed.values().size(); ++i) {
        CHECK_THAT(mixed.values()[i],
                   WithinAbs(0.5 * u.values()[i] + 0.5 * v.values()[i], 1e-6));
    }
}

TEST_CASE("conditioned denoiser predicts noise that lands on the control target") {
    ToyConditionedDenoiser conditioned;
    const Tensor4 slice = random_tensor({3, 4, 4, 4}, 15);
    std::vector<ControlSignal> controls;
    controls.push_back({ControlKind::color, Tensor4::full({3, 4, 4, 4}, 0.75f), 1.0});
    const double abar = 0.36;
    const Tensor4 e = run(conditioned, slice, Window{1, 3}, controls, 400, abar);
    // reconstruct the clean estimate (x - sqrt(1-abar)*e)/sqrt(abar)
    const double target = 2.0 * 0.75 - 1.0;
    for (size_t i = 0; i < e.values().size(); ++i) {
        const double x0 = (static_cast<double>(slice.values()[i]) -
                           std::sqrt(1.0 - abar) * e.values()[i]) /
                          std::sqrt(abar);
        REQUIRE_THAT(x0, WithinAbs(target, 1e-5));
    }
}

TEST_CASE("toy denoisers are pure and shape preserving under random windows") {
    const Tensor4 noise = random_tensor({16, 3, 3, 4}, 16);
    std::vector<std::shared_ptr<Denoiser>> denoisers = {
        std::make_shared<ToyOracleDenoiser>(Tensor4(noise)),
        std::make_shared<ToyFrameLocalDenoiser>(0.7, 0.1),
        std::make_shared<ToyControlEchoDenoiser>(),
        std::make_shared<ToyConditionedDenoiser>(),
    };
    std::mt19937 gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> start(1, 16);
        const int l = start(gen);
        const int r = std::uniform_int_distribution<int>(l, 16)(gen);
        const Window window{l, r};
        const Tensor4 slice = noise.slice_frames(l - 1, window.length());
        for (auto& d : denoisers) {
            const Tensor4 a = run(*d, slice, window);
            const Tensor4 b = run(*d, slice, window);
            REQUIRE(a.shape() == slice.shape());
            REQUIRE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
        }
    }
}

TEST_CASE("toy codec maps constant gray through a near-exact round trip") {
    ToyCodec codec;
    FrameVideo video;
    Image8 gray(16, 16);
    for (auto& b : gray.rgb) b = 128;
    video.frames = {gray};

    const Tensor4 latents = codec.encode(video);
    CHECK(latents.shape() == Shape4{1, 2, 2, 4});
    const float expected = static_cast<float>(2.0 * (128.0 / 255.0) - 1.0);
    for (int64_t y = 0; y < 2; ++y)
        for (int64_t x = 0; x < 2; ++x) CHECK_THAT(latents.at(0, y, x, 0), WithinAbs(expected, 1e-6));

    const FrameVideo back = codec.decode(latents, video.fps);
    REQUIRE(back.frames.size() == 1);
    CHECK(back.frames[0].height == 16);
    CHECK(back.frames[0].width == 16);
    for (size_t i = 0; i < back.frames[0].rgb.size(); ++i) {
        CHECK(std::abs(static_cast<int>(back.frames[0].rgb[i]) - 128) <= 1);
    }
}

TEST_CASE("decode(encode(v)) equals the 8x8 block average within one step") {
    ToyCodec codec;
    FrameVideo video;
    video.frames = {[] {
        Image8 img(16, 24);
        std::mt19937 gen(18);
        std::uniform_int_distribution<int> dist(0, 255);
        for (auto& b : img.rgb) b = static_cast<uint8_t>(dist(gen));
        return img;
    }()};

    const FrameVideo round = codec.decode(codec.encode(video), video.fps);
    const Image8& src = video.frames[0];
    const Image8& out = round.frames[0];
    for (int by = 0; by < 2; ++by) {
        for (int bx = 0; bx < 3; ++bx) {
            for (int c = 0; c < 3; ++c) {
                // independent 8x8 block mean
                double sum = 0.0;
                for (int dy = 0; dy < 8; ++dy)
                    for (int dx = 0; dx < 8; ++dx) sum += src.at(by * 8 + dy, bx * 8 + dx, c);
                const double mean = sum / 64.0;
                for (int dy = 0; dy < 8; ++dy) {
                    for (int dx = 0; dx < 8; ++dx) {
                        REQUIRE(std::abs(out.at(by * 8 + dy, bx * 8 + dx, c) - mean) <= 1.0);
                    }
                }
            }
        }
    }
}

TEST_CASE("codec rejects dimensions not divisible by 8") {
    ToyCodec codec;
    FrameVideo video;
    video.frames = {Image8(12, 16)};
    try {
        codec.encode(video);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::geometry);
    }
}

TEST_CASE("outline extractor sees no edges in a flat frame") {
    FrameVideo video;
    Image8 flat(8, 8);
    for (auto& b : flat.rgb) b = 77;
    video.frames = {flat};
    const Tensor4 outline = SobelEdgeExtractor(true).extract(video);
    for (float v : outline.values()) CHECK(v == 1.0f);  // all background
}

TEST_CASE("a vertical step drives the edge response to its maximum") {
    FrameVideo video;
    Image8 step(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) step.at(y, x, c) = x >= 4 ? 255 : 0;
    video.frames = {step};

    const Tensor4 outline = SobelEdgeExtractor(true).extract(video);
    const Tensor4 softedge = SobelEdgeExtractor(false).extract(video);
    for (int y = 1; y < 7; ++y) {
        // the columns adjacent to the step carry the full response
        CHECK(softedge.at(0, y, 3, 0) == 1.0f);
        CHECK(softedge.at(0, y, 4, 0) == 1.0f);
        CHECK(outline.at(0, y, 3, 0) == 0.0f);
        // far from the step there is no response
        CHECK(softedge.at(0, y, 0, 0) == 0.0f);
        CHECK(outline.at(0, y, 0, 0) == 1.0f);
    }
}

TEST_CASE("depth extractor is the luminance plane") {
    FrameVideo video;
    Image8 img(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            img.at(y, x, 0) = 200;
            img.at(y, x, 1) = 100;
            img.at(y, x, 2) = 50;
        }
    video.frames = {img};
    const Tensor4 depth = LuminanceDepthExtractor().extract(video);
    const double expected = (0.299 * 200 + 0.587 * 100 + 0.114 * 50) / 255.0;
    for (float v : depth.values()) CHECK_THAT(v, WithinAbs(expected, 1e-6));
}

TEST_CASE("color extractor is the identity on constant frames") {
    FrameVideo video;
    Image8 img(8, 8);
    for (size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<uint8_t>(40 + (i % 3));
    for (auto& b : img.rgb) b = 90;
    video.frames = {img};
    const Tensor4 color = BoxBlurColorExtractor().extract(video);
    for (float v : color.values()) CHECK_THAT(v, WithinAbs(90.0 / 255.0, 1e-6));
}

TEST_CASE("moving-average post-processor honors its window") {
    // single-pixel frames alternating 0/255
    FrameVideo video;
    for (int f = 0; f < 6; ++f) {
        Image8 img(1, 1);
        for (auto& b : img.rgb) b = (f % 2 == 0) ? 0 : 255;
        video.frames.push_back(img);
    }

    ToyMovingAveragePostProcessor identity(1);
    const FrameVideo same = identity.process(video);
    for (size_t f = 0; f < 6; ++f) CHECK(same.frames[f] == video.frames[f]);

    ToyMovingAveragePostProcessor smooth(3);
    const FrameVideo averaged = smooth.process(video);
    // interior frames average their three neighbours: a 255-valued frame
    // between zeros becomes (0+255+0)/3 = 85, a zero frame becomes 170
    for (int f = 1; f < 5; ++f) {
        const uint8_t expected = (f % 2 == 0) ? 170 : 85;
        CHECK(averaged.frames[static_cast<size_t>(f)].at(0, 0, 0) == expected);
    }

    FrameVideo constant;
    for (int f = 0; f < 4; ++f) {
        Image8 img(2, 2);
        for (auto& b : img.rgb) b = 123;
        constant.frames.push_back(img);
    }
    const FrameVideo unchanged = smooth.process(constant);
    for (size_t f = 0; f < 4; ++f) CHECK(unchanged.frames[f] == constant.frames[f]);

    CHECK(smooth.config().sliding_window_size == 30);
    CHECK(smooth.config().guide_weight == 10.0);
}
