#include <catch2/catch_amalgamated.hpp>

#include "toonshade/config.hpp"

using namespace toonshade;

TEST_CASE("an empty file resolves to the documented defaults") {
    const EngineConfig cfg = parse_config_text("", "empty");
    CHECK(cfg.main.frame_height == 1536);
    CHECK(cfg.main.frame_width == 1536);
    CHECK(cfg.main.cfg_scale == 7.0);
    CHECK(cfg.main.denoising_strength == 1.0);
    CHECK(cfg.main.inference_steps == 10);
    CHECK(cfg.main.window_size == 16);
    CHECK(cfg.main.window_stride == 8);
    REQUIRE(cfg.main.conditioning.size() == 2);
    CHECK(cfg.main.conditioning[0].first == ControlKind::outline);
    CHECK(cfg.main.conditioning[0].second == 0.5);
    CHECK(cfg.main.conditioning[1].first == ControlKind::color);
    CHECK(cfg.main.conditioning[1].second == 0.5);

    CHECK(cfg.editing.frame_height == 512);
    CHECK(cfg.editing.frame_width == 512);
    CHECK(cfg.editing.cfg_scale == 7.0);
    CHECK(cfg.editing.denoising_strength == 0.9);
    CHECK(cfg.editing.inference_steps == 20);
    CHECK(cfg.editing.window_size == 8);
    CHECK(cfg.editing.window_stride == 4);
    REQUIRE(cfg.editing.conditioning.size() == 2);
    CHECK(cfg.editing.conditioning[0].first == ControlKind::depth);
    CHECK(cfg.editing.conditioning[1].first == ControlKind::softedge);

    CHECK(cfg.fastblend.inference_mode == "accurate");
    CHECK(cfg.fastblend.sliding_window_size == 30);
    CHECK(cfg.fastblend.batch_size == 64);
    CHECK(cfg.fastblend.tracking);
    CHECK(cfg.fastblend.patch_size == 5);
    CHECK(cfg.fastblend.iterations == 5);
    CHECK(cfg.fastblend.guide_weight == 10.0);

    CHECK(cfg.io.fps == Fps{30, 1});
    CHECK(cfg.io.positive_prompt == "best quality, perfect anime illustration");
    CHECK(cfg.io.negative_embedding.empty());
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("overrides replace defaults and survive reprinting") {
    const std::string text =
        "[main]\n"
        "inference_steps = 5\n"
        "conditioning_scale.color = 0.25\n"
        "[io]\n"
        "fps = 24000/1001\n"
        "positive_prompt = flat shading, clean lines\n";
    const EngineConfig cfg = parse_config_text(text, "test");
    CHECK(cfg.main.inference_steps == 5);
    CHECK(cfg.main.conditioning[1].second == 0.25);
    CHECK(cfg.io.fps == Fps{24000, 1001});
    CHECK(cfg.io.positive_prompt == "flat shading, clean lines");
    // untouched sections keep defaults
    CHECK(cfg.editing.inference_steps == 20);
}

TEST_CASE("resolved printing is canonical") {
    const std::string text =
        "# comment\n"
        "[editing]\n"
        "denoising_strength = 0.75\n"
        "[fastblend]\n"
        "tracking = disabled\n";
    const EngineConfig once = parse_config_text(text, "test");
    const std::string printed = print_config(once);
    const EngineConfig twice = parse_config_text(printed, "printed");
    CHECK(print_config(twice) == printed);
    CHECK(twice.editing.denoising_strength == 0.75);
    CHECK_FALSE(twice.fastblend.tracking);
}

TEST_CASE("unknown keys are rejected by name with a line number") {
    try {
        parse_config_text("[main]\nfoo = 1\n", "test");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        const std::string what = e.what();
        CHECK(what.find("foo") != std::string::npos);
        CHECK(what.find(":2") != std::string::npos);
    }
    // a conditioning kind that belongs to the other stage is unknown too
    CHECK_THROWS_AS(parse_config_text("[main]\nconditioning_scale.depth = 0.5\n", "t"), Error);
    CHECK_THROWS_AS(parse_config_text("[nope]\n", "t"), Error);
    CHECK_THROWS_AS(parse_config_text("key_before_section = 1\n", "t"), Error);
}

TEST_CASE("malformed values carry the line number") {
    try {
        parse_config_text("[main]\n\ninference_steps = ten\n", "cfg");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("cfg:3") != std::string::npos);
    }
}

TEST_CASE("stride >= size fails validation naming the s<d constraint") {
    const EngineConfig cfg = parse_config_text("[main]\nwindow_stride = 16\n", "test");
    try {
        validate_config(cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("s<d") != std::string::npos);
    }
}

TEST_CASE("resolution must stay on the latent grid") {
    const EngineConfig cfg = parse_config_text("[editing]\nframe_height = 500\n", "test");
    CHECK_THROWS_AS(validate_config(cfg), Error);
}
