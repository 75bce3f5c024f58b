#include <doctest.h>

#include <random>

#include "datasafe/bmp.hpp"

using namespace datasafe;

namespace {

Image24 random_image(uint32_t w, uint32_t h, uint64_t seed) {
    Image24 img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<size_t>(w) * h * 3);
    std::mt19937_64 rng(seed);
    for (auto& b : img.pixels) b = static_cast<uint8_t>(rng());
    return img;
}

}  // namespace

TEST_CASE("1x1 image serializes to exactly 58 bytes") {
    Image24 img;
    img.width = 1;
    img.height = 1;
    img.pixels = {10, 20, 30};

    Bytes data = save_bmp(img);
    // 54 header bytes + 3 pixel bytes + 1 pad byte to the 4-byte row boundary.
    CHECK(data.size() == 58);
    CHECK(data[0] == 'B');
    CHECK(data[1] == 'M');
    // Stored bottom-up BGR.
    CHECK(data[54] == 30);
    CHECK(data[55] == 20);
    CHECK(data[56] == 10);
    CHECK(data[57] == 0);  // padding

    Image24 back = load_bmp(data);
    CHECK(back == img);
}

TEST_CASE("2x2 byte layout matches a hand-built file") {
    // Top row: red, green. Bottom row: blue, white.
    Image24 img;
    img.width = 2;
    img.height = 2;
    img.pixels = {255, 0, 0,  0, 255, 0,
                  0, 0, 255,  255, 255, 255};

    Bytes data = save_bmp(img);
    REQUIRE(data.size() == 54 + 2 * 8);

    // Little-endian header fields.
    auto u32 = [&](size_t off) {
        return static_cast<uint32_t>(data[off] | data[off + 1] << 8 | data[off + 2] << 16 |
                                     data[off + 3] << 24);
    };
    CHECK(u32(2) == data.size());  // file size
    CHECK(u32(10) == 54);          // pixel offset
    CHECK(u32(14) == 40);          // DIB header size
    CHECK(u32(18) == 2);           // width
    CHECK(u32(22) == 2);           // height
    CHECK(data[28] == 24);         // bpp
    CHECK(u32(30) == 0);           // BI_RGB

    // First stored row is the visual bottom row, BGR per pixel, 2-byte pad.
    Bytes expected_rows = {255, 0, 0,   255, 255, 255, 0, 0,
                           0, 0, 255,   0, 255, 0,     0, 0};
    CHECK(Bytes(data.begin() + 54, data.end()) == expected_rows);

    CHECK(load_bmp(data) == img);
}

TEST_CASE("load rejects malformed and unsupported files") {
    Image24 img = random_image(4, 4, 1);
    Bytes good = save_bmp(img);

    Bytes tiny(good.begin(), good.begin() + 20);
    CHECK_THROWS_AS(load_bmp(tiny), Error);

    Bytes bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(load_bmp(bad_magic), Error);

    Bytes eight_bit = good;
    eight_bit[28] = 8;
    CHECK_THROWS_AS(load_bmp(eight_bit), Error);

    Bytes compressed = good;
    compressed[30] = 1;  // BI_RLE8
    CHECK_THROWS_AS(load_bmp(compressed), Error);

    Bytes top_down = good;
    // Negative height marks a top-down file.
    top_down[22] = 0xfc;
    top_down[23] = 0xff;
    top_down[24] = 0xff;
    top_down[25] = 0xff;
    CHECK_THROWS_AS(load_bmp(top_down), Error);

    Bytes truncated(good.begin(), good.end() - 5);
    CHECK_THROWS_AS(load_bmp(truncated), Error);

    try {
        load_bmp(bad_magic);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnsupportedFormat);
    }
}

TEST_CASE("round trip preserves pixels across odd widths") {
    // Widths 1..8 cover all padding residues twice.
    for (uint32_t w = 1; w <= 8; ++w) {
        for (uint32_t h : {1u, 3u, 7u}) {
            Image24 img = random_image(w, h, w * 100 + h);
            CHECK(load_bmp(save_bmp(img)) == img);
        }
    }
}

TEST_CASE("save validates the pixel buffer size") {
    Image24 img;
    img.width = 2;
    img.height = 2;
    img.pixels.resize(5);
    CHECK_THROWS_AS(save_bmp(img), Error);
}
