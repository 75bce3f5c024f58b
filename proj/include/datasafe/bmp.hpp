#pragma once

#include <cstdint>
#include <span>

#include "datasafe/bytes.hpp"
#include "datasafe/errors.hpp"

namespace datasafe {

/// 24-bit RGB image, row-major from the top-left pixel. BMP stores rows
/// bottom-up in BGR order; conversion happens at load/save.
struct Image24 {
    uint32_t width = 0;
    uint32_t height = 0;
    Bytes pixels;  // 3 bytes (R, G, B) per pixel, width*height*3 total

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    uint8_t* px(uint32_t x, uint32_t y) {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
    const uint8_t* px(uint32_t x, uint32_t y) const {
        return pixels.data() + (static_cast<size_t>(y) * width + x) * 3;
    }

    bool operator==(const Image24&) const = default;
};

namespace detail {

inline uint16_t rd_u16le(std::span<const uint8_t> d, size_t off) {
    return static_cast<uint16_t>(d[off] | d[off + 1] << 8);
}
inline uint32_t rd_u32le(std::span<const uint8_t> d, size_t off) {
    return static_cast<uint32_t>(d[off] | d[off + 1] << 8 | d[off + 2] << 16 | d[off + 3] << 24);
}
inline void wr_u16le(Bytes& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
}
inline void wr_u32le(Bytes& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline size_t bmp_row_size(uint32_t width) { return (static_cast<size_t>(width) * 3 + 3) & ~size_t{3}; }

}  // namespace detail

/// Accepts only uncompressed bottom-up 24-bit BITMAPINFOHEADER files.
inline Image24 load_bmp(std::span<const uint8_t> data) {
    if (data.size() < 54) fail(ErrorKind::UnsupportedFormat, "file too small for BMP headers");
    if (data[0] != 'B' || data[1] != 'M') fail(ErrorKind::UnsupportedFormat, "missing BM magic");
    uint32_t pixel_offset = detail::rd_u32le(data, 10);
    uint32_t dib_size = detail::rd_u32le(data, 14);
    if (dib_size != 40) fail(ErrorKind::UnsupportedFormat, "only BITMAPINFOHEADER supported");
    int32_t width = static_cast<int32_t>(detail::rd_u32le(data, 18));
    int32_t height = static_cast<int32_t>(detail::rd_u32le(data, 22));
    uint16_t planes = detail::rd_u16le(data, 26);
    uint16_t bitcount = detail::rd_u16le(data, 28);
    uint32_t compression = detail::rd_u32le(data, 30);
    if (planes != 1) fail(ErrorKind::UnsupportedFormat, "planes != 1");
    if (bitcount != 24) fail(ErrorKind::UnsupportedFormat, "only 24-bit BMP supported");
    if (compression != 0) fail(ErrorKind::UnsupportedFormat, "compressed BMP not supported");
    if (width <= 0) fail(ErrorKind::UnsupportedFormat, "non-positive width");
    if (height <= 0) fail(ErrorKind::UnsupportedFormat, "top-down or empty BMP not supported");

    Image24 img;
    img.width = static_cast<uint32_t>(width);
    img.height = static_cast<uint32_t>(height);
    size_t row_size = detail::bmp_row_size(img.width);
    if (static_cast<size_t>(pixel_offset) + row_size * img.height > data.size())
        fail(ErrorKind::UnsupportedFormat, "pixel data truncated");

    img.pixels.resize(img.pixel_count() * 3);
    for (uint32_t y = 0; y < img.height; ++y) {
        // BMP row 0 is the bottom of the visual image.
        const uint8_t* row = data.data() + pixel_offset + row_size * (img.height - 1 - y);
        for (uint32_t x = 0; x < img.width; ++x) {
            uint8_t* p = img.px(x, y);
            p[0] = row[x * 3 + 2];  // R
            p[1] = row[x * 3 + 1];  // G
            p[2] = row[x * 3 + 0];  // B
        }
    }
    return img;
}

inline Bytes save_bmp(const Image24& img) {
    if (img.pixels.size() != img.pixel_count() * 3)
        fail(ErrorKind::DimensionMismatch, "pixel buffer size mismatch");
    size_t row_size = detail::bmp_row_size(img.width);
    size_t data_size = row_size * img.height;
    uint32_t file_size = static_cast<uint32_t>(54 + data_size);

    Bytes out;
    out.reserve(file_size);
    out.push_back('B');
    out.push_back('M');
    detail::wr_u32le(out, file_size);
    detail::wr_u32le(out, 0);   // reserved
    detail::wr_u32le(out, 54);  // pixel data offset
    detail::wr_u32le(out, 40);  // BITMAPINFOHEADER
    detail::wr_u32le(out, img.width);
    detail::wr_u32le(out, img.height);
    detail::wr_u16le(out, 1);   // planes
    detail::wr_u16le(out, 24);  // bits per pixel
    detail::wr_u32le(out, 0);   // BI_RGB
    detail::wr_u32le(out, static_cast<uint32_t>(data_size));
    detail::wr_u32le(out, 2835);  // 72 DPI
    detail::wr_u32le(out, 2835);
    detail::wr_u32le(out, 0);
    detail::wr_u32le(out, 0);

    for (uint32_t y = 0; y < img.height; ++y) {
        uint32_t src_y = img.height - 1 - y;
        for (uint32_t x = 0; x < img.width; ++x) {
            const uint8_t* p = img.px(x, src_y);
            out.push_back(p[2]);  // B
            out.push_back(p[1]);  // G
            out.push_back(p[0]);  // R
        }
        for (size_t pad = img.width * 3ul; pad < row_size; ++pad) out.push_back(0);
    }
    return out;
}

}  // namespace datasafe
