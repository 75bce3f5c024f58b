#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "datasafe/bmp.hpp"
#include "datasafe/bytes.hpp"
#include "datasafe/crypto.hpp"
#include "datasafe/errors.hpp"

namespace datasafe {

enum class WmAction : uint8_t {
    Lsbr = 0,
    Lsbm = 1,
    RandomFill = 2,
    Unchanged = 3,
};

// Total mapping from 3-bit feature value to modifying action.
using RuleTable = std::array<WmAction, 8>;

inline RuleTable default_rule_table() {
    RuleTable t{};
    for (size_t v = 0; v < 8; ++v) t[v] = static_cast<WmAction>(v % 4);
    return t;
}

/// Secret bundle required to locate and read the watermark back out.
/// Serialized layout (58 bytes) is the exact blob that gets AEAD-sealed to
/// the buyer during delivery.
struct LocationKey {
    std::array<uint8_t, 32> seed_x{};
    uint64_t fill_seed = 0;
    uint8_t target_channel = 2;  // 0=R, 1=G, 2=B
    uint32_t wm_len = 0;
    RuleTable rules = default_rule_table();

    static constexpr size_t kSerializedSize = 58;

    Bytes serialize() const {
        ByteWriter w;
        w.raw(Bytes{'D', 'S', 'L', 'K'});
        w.u8(0x01);
        w.raw(seed_x);
        w.u64be(fill_seed);
        w.u8(target_channel);
        w.u32be(wm_len);
        for (WmAction a : rules) w.u8(static_cast<uint8_t>(a));
        return w.take();
    }

    static LocationKey parse(std::span<const uint8_t> data) {
        ByteReader r(data);
        Bytes magic = r.raw(4);
        if (magic != Bytes{'D', 'S', 'L', 'K'})
            fail(ErrorKind::UnsupportedFormat, "bad location key magic");
        if (r.u8() != 0x01) fail(ErrorKind::UnsupportedFormat, "unknown location key version");
        LocationKey lk;
        lk.seed_x = r.arr<32>();
        lk.fill_seed = r.u64be();
        lk.target_channel = r.u8();
        if (lk.target_channel > 2) fail(ErrorKind::ParseError, "target channel out of range");
        lk.wm_len = r.u32be();
        for (auto& a : lk.rules) {
            uint8_t code = r.u8();
            if (code > 3) fail(ErrorKind::ParseError, "action code out of range");
            a = static_cast<WmAction>(code);
        }
        return lk;
    }
};

using Watermark = BitVec;

inline Watermark signature_to_watermark(const Signature& sig) {
    auto enc = sig.encode();
    return unpack_bits(std::span<const uint8_t>(enc.data(), enc.size()), 512);
}

inline Signature watermark_to_signature(const Watermark& wm) {
    if (wm.size() != 512) fail(ErrorKind::WatermarkInvalid, "watermark must be 512 bits");
    return Signature::decode(pack_bits(wm));
}

/// Feature value from bit 1 of each channel XORed with three consecutive
/// position-stream bits.
inline int feature_group(uint8_t r, uint8_t g, uint8_t b, uint8_t x0, uint8_t x1, uint8_t x2) {
    int fr = ((r >> 1) & 1) ^ x0;
    int fg = ((g >> 1) & 1) ^ x1;
    int fb = ((b >> 1) & 1) ^ x2;
    return fr << 2 | fg << 1 | fb;
}

/// LSB replacement: force the LSB to the message bit with a parity-directed
/// unit step.
inline uint8_t lsbr(uint8_t value, uint8_t bit) {
    if ((value & 1) == bit) return value;
    return (value % 2 == 0) ? value + 1 : value - 1;
}

/// LSB matching with the step direction pinned so bit 1 (and everything
/// above) survives; the 0 and 255 boundary cases fall out of the same rule.
inline uint8_t lsbm(uint8_t value, uint8_t bit) {
    if ((value & 1) == bit) return value;
    return ((value & 1) == 0) ? value + 1 : value - 1;
}

namespace detail {

inline HashStream x_stream(const std::array<uint8_t, 32>& seed_x) {
    ByteWriter w;
    w.lp_string("DSWM-x");
    w.raw(seed_x);
    return HashStream(w.take());
}

inline HashStream fill_stream(uint64_t fill_seed) {
    ByteWriter w;
    w.lp_string("DSWM-f");
    w.u64be(fill_seed);
    return HashStream(w.take());
}

}  // namespace detail

struct EmbedResult {
    Image24 covered;
    LocationKey key;
};

/// Row-major scan: carrier pixels (LSBR/LSBM by feature group) consume
/// watermark bits; RANDOM_FILL pixels take fill-stream bits across the whole
/// image so carriers are statistically indistinguishable from filler. Only
/// bit 0 of the target channel is ever touched.
inline EmbedResult embed(const Image24& image, const Watermark& wm,
                         const std::array<uint8_t, 32>& seed_x, uint64_t fill_seed,
                         const RuleTable& rules = default_rule_table(),
                         uint8_t target_channel = 2) {
    if (wm.empty()) fail(ErrorKind::WrongLength, "watermark is empty");
    if (target_channel > 2) fail(ErrorKind::ParseError, "target channel out of range");

    EmbedResult result;
    result.covered = image;
    result.key.seed_x = seed_x;
    result.key.fill_seed = fill_seed;
    result.key.target_channel = target_channel;
    result.key.wm_len = static_cast<uint32_t>(wm.size());
    result.key.rules = rules;

    HashStream xs = detail::x_stream(seed_x);
    HashStream fs = detail::fill_stream(fill_seed);
    size_t placed = 0;

    for (uint32_t y = 0; y < image.height; ++y) {
        for (uint32_t x = 0; x < image.width; ++x) {
            uint8_t x0 = xs.next_bit(), x1 = xs.next_bit(), x2 = xs.next_bit();
            uint8_t* p = result.covered.px(x, y);
            int fg = feature_group(p[0], p[1], p[2], x0, x1, x2);
            uint8_t& carrier = p[target_channel];
            switch (rules[static_cast<size_t>(fg)]) {
                case WmAction::Lsbr:
                    if (placed < wm.size()) carrier = lsbr(carrier, wm[placed++]);
                    break;
                case WmAction::Lsbm:
                    if (placed < wm.size()) carrier = lsbm(carrier, wm[placed++]);
                    break;
                case WmAction::RandomFill:
                    carrier = lsbr(carrier, fs.next_bit());
                    break;
                case WmAction::Unchanged:
                    break;
            }
        }
    }

    if (placed < wm.size())
        fail(ErrorKind::InsufficientCapacity, "image has fewer carrier pixels than watermark bits");
    return result;
}

/// Reclassifies pixels from the regenerated stream (valid because embedding
/// never disturbs bit 1) and reads carrier LSBs in order.
inline Watermark extract(const Image24& covered, const LocationKey& lk) {
    Watermark out;
    out.reserve(lk.wm_len);
    HashStream xs = detail::x_stream(lk.seed_x);

    for (uint32_t y = 0; y < covered.height && out.size() < lk.wm_len; ++y) {
        for (uint32_t x = 0; x < covered.width && out.size() < lk.wm_len; ++x) {
            uint8_t x0 = xs.next_bit(), x1 = xs.next_bit(), x2 = xs.next_bit();
            const uint8_t* p = covered.px(x, y);
            int fg = feature_group(p[0], p[1], p[2], x0, x1, x2);
            WmAction action = lk.rules[static_cast<size_t>(fg)];
            if (action == WmAction::Lsbr || action == WmAction::Lsbm) {
                out.push_back(p[lk.target_channel] & 1);
            }
        }
    }

    if (out.size() < lk.wm_len)
        fail(ErrorKind::InsufficientCapacity, "image has fewer carrier pixels than wm_len");
    return out;
}

/// 10*log10(255^2 / MSE) over all channel samples; identical images report
/// +infinity.
inline double psnr(const Image24& original, const Image24& covered) {
    if (original.width != covered.width || original.height != covered.height)
        fail(ErrorKind::DimensionMismatch, "image dimensions differ");
    double sum_sq = 0.0;
    for (size_t i = 0; i < original.pixels.size(); ++i) {
        double d = static_cast<double>(original.pixels[i]) - covered.pixels[i];
        sum_sq += d * d;
    }
    if (sum_sq == 0.0) return std::numeric_limits<double>::infinity();
    double mse = sum_sq / static_cast<double>(original.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace datasafe
