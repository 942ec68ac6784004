#include <random>
#include <sstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "toonshade/tensor_io.hpp"

using namespace toonshade;

namespace {

std::string encode(const Tensor4& t) {
    std::ostringstream out(std::ios::binary);
    write_tensor(t, out);
    return out.str();
}

Tensor4 decode(const std::string& bytes) {
    std::istringstream in(bytes, std::ios::binary);
    return read_tensor(in);
}

// Stream buffer that starts failing after a fixed number of bytes.
struct LimitedBuf : std::streambuf {
    explicit LimitedBuf(size_t limit) : remaining(limit) {}
    std::streamsize xsputn(const char*, std::streamsize n) override {
        if (static_cast<size_t>(n) > remaining) return 0;
        remaining -= static_cast<size_t>(n);
        return n;
    }
    int_type overflow(int_type) override { return traits_type::eof(); }
    size_t remaining;
};

}  // namespace

TEST_CASE("scalar zero tensor encodes to 28 bytes with a zero payload") {
    const std::string bytes = encode(Tensor4({1, 1, 1, 1}));
    REQUIRE(bytes.size() == 28);
    CHECK(bytes.substr(0, 4) == "TNSR");
    for (size_t i = 24; i < 28; ++i) CHECK(bytes[i] == '\0');
}

TEST_CASE("scalar 1.0 encodes to the little-endian IEEE-754 pattern") {
    const std::string bytes = encode(Tensor4::full({1, 1, 1, 1}, 1.0f));
    REQUIRE(bytes.size() == 28);
    CHECK(static_cast<unsigned char>(bytes[24]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[25]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[26]) == 0x80);
    CHECK(static_cast<unsigned char>(bytes[27]) == 0x3F);
}

TEST_CASE("round trip is bit exact for random tensors") {
    std::mt19937 gen(1234);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<float> value(-100.0f, 100.0f);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor4 t({dim(gen), dim(gen), dim(gen), dim(gen)});
        for (auto& v : t.values()) v = value(gen);
        const Tensor4 back = decode(encode(t));
        REQUIRE(back.shape() == t.shape());
        auto a = t.values();
        auto b = back.values();
        for (size_t i = 0; i < a.size(); ++i) {
            REQUIRE(std::bit_cast<uint32_t>(a[i]) == std::bit_cast<uint32_t>(b[i]));
        }
    }
}

TEST_CASE("round trip stays bit exact at ten million elements") {
    Tensor4 t({10, 100, 100, 100});
    std::mt19937 gen(77);
    std::uniform_real_distribution<float> value(-1e6f, 1e6f);
    auto vs = t.values();
    for (size_t i = 0; i < vs.size(); i += 997) vs[i] = value(gen);  // sparse fill is enough
    const Tensor4 back = decode(encode(t));
    REQUIRE(back.shape() == t.shape());
    auto bs = back.values();
    for (size_t i = 0; i < vs.size(); i += 997) {
        REQUIRE(std::bit_cast<uint32_t>(vs[i]) == std::bit_cast<uint32_t>(bs[i]));
    }
    REQUIRE(std::equal(vs.begin(), vs.end(), bs.begin()));
}

TEST_CASE("bad magic is a format error") {
    std::string bytes = encode(Tensor4({1, 1, 1, 1}));
    bytes.replace(0, 4, "XXXX");
    CHECK_THROWS_MATCHES(decode(bytes), Error, Catch::Matchers::MessageMatches(
                                                   Catch::Matchers::ContainsSubstring("magic")));
}

TEST_CASE("rank other than 4 is rejected naming the field") {
    std::string bytes = encode(Tensor4({1, 1, 1, 1}));
    bytes[4] = 3;  // rank field
    try {
        decode(bytes);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        CHECK(std::string(e.what()).find("rank") != std::string::npos);
    }
}

TEST_CASE("truncated payload reports expected and actual byte counts") {
    const std::string bytes = encode(Tensor4({2, 1, 1, 1}));
    try {
        decode(bytes.substr(0, bytes.size() - 3));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        const std::string what = e.what();
        CHECK(what.find("expected 8 bytes") != std::string::npos);
        CHECK(what.find("got 5") != std::string::npos);
    }
}

TEST_CASE("sink failure reports the byte offset") {
    LimitedBuf buf(24);  // header fits, payload does not
    std::ostream out(&buf);
    try {
        write_tensor(Tensor4({1, 1, 1, 1}), out);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
        CHECK(std::string(e.what()).find("byte offset 24") != std::string::npos);
    }
}
