#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "datasafe/errors.hpp"

namespace datasafe {

using Bytes = std::vector<uint8_t>;
// One element per bit, values 0/1. Wasteful but simple; sizes here are small.
using BitVec = std::vector<uint8_t>;

using Hash32 = std::array<uint8_t, 32>;
using TxId = Hash32;
using Digest = Hash32;
using Address = std::array<uint8_t, 20>;

inline std::string to_hex(std::span<const uint8_t> data) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

template <size_t N>
std::string to_hex(const std::array<uint8_t, N>& a) {
    return to_hex(std::span<const uint8_t>(a.data(), a.size()));
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline Bytes from_hex(const std::string& s) {
    if (s.size() % 2 != 0) fail(ErrorKind::ParseError, "odd-length hex string");
    Bytes out;
    out.reserve(s.size() / 2);
    for (size_t i = 0; i < s.size(); i += 2) {
        int hi = hex_nibble(s[i]);
        int lo = hex_nibble(s[i + 1]);
        if (hi < 0 || lo < 0) fail(ErrorKind::ParseError, "invalid hex digit");
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

template <size_t N>
std::array<uint8_t, N> array_from_hex(const std::string& s) {
    Bytes b = from_hex(s);
    if (b.size() != N) fail(ErrorKind::ParseError, "hex string has wrong length");
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), b.data(), N);
    return out;
}

// Pack bits MSB-first: bit 0 of the vector lands in the high bit of byte 0.
inline Bytes pack_bits(const BitVec& bits) {
    Bytes out((bits.size() + 7) / 8, 0);
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) out[i / 8] |= static_cast<uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

inline BitVec unpack_bits(std::span<const uint8_t> bytes, size_t nbits) {
    if (nbits > bytes.size() * 8) fail(ErrorKind::WrongLength, "bit count exceeds input");
    BitVec out(nbits);
    for (size_t i = 0; i < nbits; ++i) {
        out[i] = (bytes[i / 8] >> (7 - i % 8)) & 1;
    }
    return out;
}

inline size_t hamming_distance(const BitVec& a, const BitVec& b) {
    if (a.size() != b.size()) fail(ErrorKind::WrongLength, "bit vectors differ in length");
    size_t d = 0;
    for (size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

/// Canonical serialization helper: fixed field order, big-endian integers,
/// u32 length prefixes on variable byte strings.
class ByteWriter {
public:
    void u8(uint8_t v) { out_.push_back(v); }
    void u16be(uint16_t v) {
        out_.push_back(static_cast<uint8_t>(v >> 8));
        out_.push_back(static_cast<uint8_t>(v));
    }
    void u32be(uint32_t v) {
        for (int i = 3; i >= 0; --i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64be(uint64_t v) {
        for (int i = 7; i >= 0; --i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void raw(std::span<const uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }
    void raw(const Bytes& data) { raw(std::span<const uint8_t>(data)); }
    template <size_t N>
    void raw(const std::array<uint8_t, N>& data) {
        raw(std::span<const uint8_t>(data.data(), N));
    }
    void lp_bytes(std::span<const uint8_t> data) {
        u32be(static_cast<uint32_t>(data.size()));
        raw(data);
    }
    void lp_bytes(const Bytes& data) { lp_bytes(std::span<const uint8_t>(data)); }
    void lp_string(const std::string& s) {
        u32be(static_cast<uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16be() {
        auto b = take(2);
        return static_cast<uint16_t>(b[0] << 8 | b[1]);
    }
    uint32_t u32be() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
        return v;
    }
    uint64_t u64be() {
        auto b = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
        return v;
    }
    Bytes raw(size_t n) {
        auto b = take(n);
        return Bytes(b.begin(), b.end());
    }
    template <size_t N>
    std::array<uint8_t, N> arr() {
        auto b = take(N);
        std::array<uint8_t, N> out{};
        std::memcpy(out.data(), b.data(), N);
        return out;
    }
    Bytes lp_bytes() { return raw(u32be()); }
    std::string lp_string() {
        Bytes b = lp_bytes();
        return std::string(b.begin(), b.end());
    }
    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size()) fail(ErrorKind::ParseError, "record truncated");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace datasafe
