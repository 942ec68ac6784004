#include <algorithm>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "toonshade/rng.hpp"

using namespace toonshade;

TEST_CASE("philox core matches the published reference vectors") {
    {
        const auto r = detail::philox4x32_10(0, 0, 0, 0, 0, 0);
        CHECK(r.v[0] == 0x6627e8d5u);
        CHECK(r.v[1] == 0xe169c58du);
        CHECK(r.v[2] == 0xbc57ac4cu);
        CHECK(r.v[3] == 0x9b00dbd8u);
    }
    {
        const auto r = detail::philox4x32_10(0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu,
                                             0xffffffffu, 0xffffffffu);
        CHECK(r.v[0] == 0x408f276du);
        CHECK(r.v[1] == 0x41c83b0eu);
        CHECK(r.v[2] == 0xa20bc7c6u);
        CHECK(r.v[3] == 0x6d5451fdu);
    }
    {
        const auto r = detail::philox4x32_10(0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u,
                                             0xa4093822u, 0x299f31d0u);
        CHECK(r.v[0] == 0xd16cfe09u);
        CHECK(r.v[1] == 0x94fdccebu);
        CHECK(r.v[2] == 0x5001e420u);
        CHECK(r.v[3] == 0x24126ea1u);
    }
}

TEST_CASE("identical keys reproduce identical sequences") {
    const SeededRng a(0xDEADBEEFCAFEF00Dull);
    const SeededRng b(0xDEADBEEFCAFEF00Dull);
    std::vector<float> va(64), vb(64);
    a.stream(3, "init").fill_normal(va);
    b.stream(3, "init").fill_normal(vb);
    CHECK(va == vb);
}

TEST_CASE("distinct frames and purposes give distinct streams") {
    const SeededRng rng(7);
    std::vector<float> f0(16), f1(16), renoise(16);
    rng.stream(0, "init").fill_normal(f0);
    rng.stream(1, "init").fill_normal(f1);
    rng.stream(0, "renoise").fill_normal(renoise);
    CHECK(f0 != f1);
    CHECK(f0 != renoise);
}

TEST_CASE("draws are independent of evaluation order") {
    const SeededRng rng(99);
    const auto stream = rng.stream(5, "init");
    // random access in reverse, then batch fill from index 0
    std::vector<float> reversed(40);
    for (int i = 39; i >= 0; --i) reversed[static_cast<size_t>(i)] = stream.normal_at(i);
    std::vector<float> filled(40);
    stream.fill_normal(filled);
    CHECK(reversed == filled);
    // unaligned start offsets agree with random access as well
    std::vector<float> tail(7);
    stream.fill_normal(tail, 3);
    for (int i = 0; i < 7; ++i) CHECK(tail[static_cast<size_t>(i)] == stream.normal_at(3 + i));
}

TEST_CASE("normal draws pass a Kolmogorov-Smirnov test against N(0,1)") {
    constexpr size_t n = 100000;
    std::vector<float> draws(n);
    SeededRng(20240611).stream(0, "ks").fill_normal(draws);
    std::sort(draws.begin(), draws.end());
    const auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    double d_stat = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double f = cdf(draws[i]);
        d_stat = std::max(d_stat, std::abs(f - static_cast<double>(i) / n));
        d_stat = std::max(d_stat, std::abs(static_cast<double>(i + 1) / n - f));
    }
    // critical value sqrt(ln(2/alpha)/2)/sqrt(n) at alpha = 0.001
    const double critical = std::sqrt(std::log(2.0 / 0.001) / 2.0) / std::sqrt(static_cast<double>(n));
    INFO("D = " << d_stat << ", critical = " << critical);
    CHECK(d_stat < critical);
}
