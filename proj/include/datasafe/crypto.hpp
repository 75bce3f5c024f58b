#pragma once

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/obj_mac.h>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "datasafe/bytes.hpp"
#include "datasafe/errors.hpp"

namespace datasafe {

using Scalar = std::array<uint8_t, 32>;   // big-endian scalar mod curve order
using PubKey = std::array<uint8_t, 33>;   // compressed SEC1 point
using SymKey = std::array<uint8_t, 32>;
using Nonce = std::array<uint8_t, 12>;

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline Hash32 sha256(std::span<const uint8_t> data) {
    Hash32 out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32) {
        fail(ErrorKind::IoError, "sha256 failed");
    }
    return out;
}

inline Hash32 sha256(const Bytes& data) { return sha256(std::span<const uint8_t>(data)); }

inline Hash32 sha256(const std::string& s) {
    return sha256(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
}

inline Hash32 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> msg) {
    // HMAC per FIPS 198 on top of the EVP digest; block size 64.
    std::array<uint8_t, 64> k{};
    if (key.size() > 64) {
        Hash32 kh = sha256(key);
        std::memcpy(k.data(), kh.data(), 32);
    } else {
        std::memcpy(k.data(), key.data(), key.size());
    }
    Bytes inner;
    inner.reserve(64 + msg.size());
    for (uint8_t b : k) inner.push_back(b ^ 0x36);
    inner.insert(inner.end(), msg.begin(), msg.end());
    Hash32 ih = sha256(inner);
    Bytes outer;
    outer.reserve(64 + 32);
    for (uint8_t b : k) outer.push_back(b ^ 0x5c);
    outer.insert(outer.end(), ih.begin(), ih.end());
    return sha256(outer);
}

/// Deterministic byte/bit stream: block i = SHA-256(seed || i). Used for the
/// watermark position stream, random fill bits, and seed derivation.
class HashStream {
public:
    explicit HashStream(Bytes seed) : seed_(std::move(seed)) {}

    uint8_t next_byte() {
        if (pos_ == 32) refill();
        return block_[pos_++];
    }

    uint8_t next_bit() {
        if (bit_pos_ == 0) {
            cur_byte_ = next_byte();
            bit_pos_ = 8;
        }
        --bit_pos_;
        return (cur_byte_ >> bit_pos_) & 1;
    }

    Bytes next_bytes(size_t n) {
        Bytes out(n);
        for (size_t i = 0; i < n; ++i) out[i] = next_byte();
        return out;
    }

private:
    void refill() {
        ByteWriter w;
        w.raw(seed_);
        w.u64be(counter_++);
        block_ = sha256(w.bytes());
        pos_ = 0;
    }

    Bytes seed_;
    Hash32 block_{};
    size_t pos_ = 32;
    uint64_t counter_ = 0;
    uint8_t cur_byte_ = 0;
    int bit_pos_ = 0;
};

inline Bytes seed_bytes(uint64_t seed) {
    ByteWriter w;
    w.u64be(seed);
    return w.take();
}

/// Derives an independent 64-bit seed from a master seed and a label.
inline uint64_t derive_seed(uint64_t master, const std::string& label) {
    ByteWriter w;
    w.u64be(master);
    w.lp_string(label);
    Hash32 h = sha256(w.bytes());
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = v << 8 | h[i];
    return v;
}

inline std::array<uint8_t, 32> derive_seed32(uint64_t master, const std::string& label) {
    ByteWriter w;
    w.u64be(master);
    w.lp_string(label);
    return sha256(w.bytes());
}

// ---------------------------------------------------------------------------
// AEAD (ChaCha20-Poly1305, 12-byte nonce, 16-byte tag appended)
// ---------------------------------------------------------------------------

inline Bytes aead_encrypt(const SymKey& key, std::span<const uint8_t> plaintext,
                          const Nonce& nonce) {
    std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                        EVP_CIPHER_CTX_free);
    if (!ctx) fail(ErrorKind::IoError, "cipher ctx");
    if (EVP_EncryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(),
                           nonce.data()) != 1)
        fail(ErrorKind::IoError, "encrypt init");
    Bytes out(plaintext.size() + 16);
    int len = 0;
    if (EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                          static_cast<int>(plaintext.size())) != 1)
        fail(ErrorKind::IoError, "encrypt update");
    int total = len;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + total, &len) != 1)
        fail(ErrorKind::IoError, "encrypt final");
    total += len;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_GET_TAG, 16, out.data() + total) != 1)
        fail(ErrorKind::IoError, "get tag");
    out.resize(static_cast<size_t>(total) + 16);
    return out;
}

inline Bytes aead_decrypt(const SymKey& key, std::span<const uint8_t> ciphertext,
                          const Nonce& nonce) {
    if (ciphertext.size() < 16) fail(ErrorKind::AuthFailure, "ciphertext too short");
    std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(EVP_CIPHER_CTX_new(),
                                                                        EVP_CIPHER_CTX_free);
    if (!ctx) fail(ErrorKind::IoError, "cipher ctx");
    if (EVP_DecryptInit_ex(ctx.get(), EVP_chacha20_poly1305(), nullptr, key.data(),
                           nonce.data()) != 1)
        fail(ErrorKind::IoError, "decrypt init");
    size_t ct_len = ciphertext.size() - 16;
    Bytes tag(ciphertext.begin() + static_cast<long>(ct_len), ciphertext.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_AEAD_SET_TAG, 16, tag.data()) != 1)
        fail(ErrorKind::IoError, "set tag");
    Bytes out(ct_len);
    int len = 0;
    if (EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                          static_cast<int>(ct_len)) != 1)
        fail(ErrorKind::AuthFailure, "aead tag mismatch");
    int total = len;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + total, &len) != 1)
        fail(ErrorKind::AuthFailure, "aead tag mismatch");
    total += len;
    out.resize(static_cast<size_t>(total));
    return out;
}

// ---------------------------------------------------------------------------
// Elliptic curve: keygen, deterministic low-s ECDSA, ECDH
// ---------------------------------------------------------------------------

struct Signature {
    Scalar r{};
    Scalar s{};

    std::array<uint8_t, 64> encode() const {
        std::array<uint8_t, 64> out{};
        std::memcpy(out.data(), r.data(), 32);
        std::memcpy(out.data() + 32, s.data(), 32);
        return out;
    }

    Bytes encode_bytes() const {
        auto e = encode();
        return Bytes(e.begin(), e.end());
    }

    static Signature decode(std::span<const uint8_t> data) {
        if (data.size() != 64)
            fail(ErrorKind::InvalidSignatureEncoding, "signature must be 64 bytes");
        Signature sig;
        std::memcpy(sig.r.data(), data.data(), 32);
        std::memcpy(sig.s.data(), data.data() + 32, 32);
        return sig;
    }

    bool operator==(const Signature&) const = default;
};

struct KeyPair {
    Scalar sk{};
    PubKey pk{};
};

namespace detail {

struct BnDeleter {
    void operator()(BIGNUM* p) const { BN_free(p); }
};
struct PointDeleter {
    void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using PointPtr = std::unique_ptr<EC_POINT, PointDeleter>;

inline BnPtr bn_from(std::span<const uint8_t> be) {
    BnPtr p(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
    if (!p) fail(ErrorKind::IoError, "bn alloc");
    return p;
}

inline Scalar bn_to_scalar(const BIGNUM* bn) {
    Scalar out{};
    if (BN_bn2binpad(bn, out.data(), 32) != 32) fail(ErrorKind::IoError, "scalar overflow");
    return out;
}

}  // namespace detail

/// Wraps one named curve; all scalar/point encodings are fixed-width
/// big-endian so ledger hashing and watermark bytes are stable.
class Curve {
public:
    explicit Curve(const std::string& name) {
        int nid = NID_undef;
        if (name == "secp256k1") nid = NID_secp256k1;
        else if (name == "secp256r1" || name == "prime256v1" || name == "p256")
            nid = NID_X9_62_prime256v1;
        else
            fail(ErrorKind::ParseError, "unknown curve: " + name);
        group_ = EC_GROUP_new_by_curve_name(nid);
        if (!group_) fail(ErrorKind::IoError, "curve init");
        ctx_ = BN_CTX_new();
        order_ = BN_new();
        half_order_ = BN_new();
        EC_GROUP_get_order(group_, order_, ctx_);
        BN_rshift1(half_order_, order_);
    }

    ~Curve() {
        BN_free(half_order_);
        BN_free(order_);
        BN_CTX_free(ctx_);
        EC_GROUP_free(group_);
    }

    Curve(const Curve&) = delete;
    Curve& operator=(const Curve&) = delete;

    static const Curve& get(const std::string& name = "secp256k1") {
        static Curve k1("secp256k1");
        static Curve r1("secp256r1");
        if (name == "secp256k1") return k1;
        if (name == "secp256r1" || name == "prime256v1" || name == "p256") return r1;
        fail(ErrorKind::ParseError, "unknown curve: " + name);
    }

    Scalar order() const { return detail::bn_to_scalar(order_); }

    /// Rejection-samples a scalar in [1, n-1] from a hash stream over the seed.
    KeyPair keygen(std::span<const uint8_t> seed) const {
        Bytes s(seed.begin(), seed.end());
        HashStream stream(s);
        for (;;) {
            Bytes cand = stream.next_bytes(32);
            auto bn = detail::bn_from(cand);
            if (BN_is_zero(bn.get()) || BN_cmp(bn.get(), order_) >= 0) continue;
            KeyPair kp;
            kp.sk = detail::bn_to_scalar(bn.get());
            kp.pk = derive_pub(kp.sk);
            return kp;
        }
    }

    KeyPair keygen(uint64_t seed) const {
        Bytes s = seed_bytes(seed);
        return keygen(std::span<const uint8_t>(s));
    }

    PubKey derive_pub(const Scalar& sk) const {
        auto k = detail::bn_from(sk);
        detail::PointPtr p(EC_POINT_new(group_));
        if (EC_POINT_mul(group_, p.get(), k.get(), nullptr, nullptr, ctx_) != 1)
            fail(ErrorKind::IoError, "scalar mul");
        return encode_point(p.get());
    }

    /// Base-point scalar multiplication; empty result means the identity point.
    std::optional<PubKey> scalar_mul_base(const Scalar& k) const {
        auto bn = detail::bn_from(k);
        detail::PointPtr p(EC_POINT_new(group_));
        if (EC_POINT_mul(group_, p.get(), bn.get(), nullptr, nullptr, ctx_) != 1)
            fail(ErrorKind::IoError, "scalar mul");
        if (EC_POINT_is_at_infinity(group_, p.get())) return std::nullopt;
        return encode_point(p.get());
    }

    bool is_on_curve(const PubKey& pk) const {
        try {
            decode_point(pk);
            return true;
        } catch (const Error&) {
            return false;
        }
    }

    /// ECDSA with a nonce derived from (sk, message hash): signing is a pure
    /// function, so ledger bytes and watermark content are reproducible.
    Signature sign(const Scalar& sk, std::span<const uint8_t> message) const {
        Hash32 digest = sha256(message);
        auto e = detail::bn_from(digest);
        auto d = detail::bn_from(sk);
        detail::BnPtr r(BN_new()), s(BN_new()), kinv(BN_new()), tmp(BN_new());

        ByteWriter nw;
        nw.raw(sk);
        nw.raw(digest);
        HashStream nonce_stream(nw.take());
        for (;;) {
            Bytes cand = nonce_stream.next_bytes(32);
            auto k = detail::bn_from(cand);
            if (BN_is_zero(k.get()) || BN_cmp(k.get(), order_) >= 0) continue;

            detail::PointPtr R(EC_POINT_new(group_));
            if (EC_POINT_mul(group_, R.get(), k.get(), nullptr, nullptr, ctx_) != 1)
                fail(ErrorKind::IoError, "scalar mul");
            detail::BnPtr x(BN_new());
            EC_POINT_get_affine_coordinates(group_, R.get(), x.get(), nullptr, ctx_);
            BN_nnmod(r.get(), x.get(), order_, ctx_);
            if (BN_is_zero(r.get())) continue;

            BN_mod_inverse(kinv.get(), k.get(), order_, ctx_);
            BN_mod_mul(tmp.get(), r.get(), d.get(), order_, ctx_);
            BN_mod_add(tmp.get(), tmp.get(), e.get(), order_, ctx_);
            BN_mod_mul(s.get(), kinv.get(), tmp.get(), order_, ctx_);
            if (BN_is_zero(s.get())) continue;

            // Canonical low-s form.
            if (BN_cmp(s.get(), half_order_) > 0) BN_sub(s.get(), order_, s.get());

            Signature sig;
            sig.r = detail::bn_to_scalar(r.get());
            sig.s = detail::bn_to_scalar(s.get());
            return sig;
        }
    }

    bool verify(const PubKey& pk, std::span<const uint8_t> message, const Signature& sig) const {
        auto r = detail::bn_from(sig.r);
        auto s = detail::bn_from(sig.s);
        if (BN_is_zero(r.get()) || BN_cmp(r.get(), order_) >= 0) return false;
        if (BN_is_zero(s.get()) || BN_cmp(s.get(), order_) >= 0) return false;
        if (BN_cmp(s.get(), half_order_) > 0) return false;  // reject malleable high-s

        detail::PointPtr q;
        try {
            q = decode_point(pk);
        } catch (const Error&) {
            return false;
        }
        Hash32 digest = sha256(message);
        auto e = detail::bn_from(digest);
        detail::BnPtr sinv(BN_new()), u1(BN_new()), u2(BN_new());
        BN_mod_inverse(sinv.get(), s.get(), order_, ctx_);
        BN_mod_mul(u1.get(), e.get(), sinv.get(), order_, ctx_);
        BN_mod_mul(u2.get(), r.get(), sinv.get(), order_, ctx_);
        detail::PointPtr X(EC_POINT_new(group_));
        if (EC_POINT_mul(group_, X.get(), u1.get(), q.get(), u2.get(), ctx_) != 1) return false;
        if (EC_POINT_is_at_infinity(group_, X.get())) return false;
        detail::BnPtr x(BN_new()), v(BN_new());
        EC_POINT_get_affine_coordinates(group_, X.get(), x.get(), nullptr, ctx_);
        BN_nnmod(v.get(), x.get(), order_, ctx_);
        return BN_cmp(v.get(), r.get()) == 0;
    }

    /// k = SHA-256("DSKDF1" || x-coordinate of sk * peer_pk).
    SymKey ecdh(const Scalar& sk, const PubKey& peer_pk) const {
        detail::PointPtr q = decode_point(peer_pk);
        auto d = detail::bn_from(sk);
        detail::PointPtr shared(EC_POINT_new(group_));
        if (EC_POINT_mul(group_, shared.get(), nullptr, q.get(), d.get(), ctx_) != 1)
            fail(ErrorKind::IoError, "ecdh mul");
        if (EC_POINT_is_at_infinity(group_, shared.get()))
            fail(ErrorKind::PointNotOnCurve, "degenerate shared point");
        detail::BnPtr x(BN_new());
        EC_POINT_get_affine_coordinates(group_, shared.get(), x.get(), nullptr, ctx_);
        ByteWriter w;
        w.lp_string("DSKDF1");
        w.raw(detail::bn_to_scalar(x.get()));
        return sha256(w.bytes());
    }

    std::optional<std::pair<Scalar, Scalar>> affine(const PubKey& pk) const {
        detail::PointPtr p;
        try {
            p = decode_point(pk);
        } catch (const Error&) {
            return std::nullopt;
        }
        detail::BnPtr x(BN_new()), y(BN_new());
        EC_POINT_get_affine_coordinates(group_, p.get(), x.get(), y.get(), ctx_);
        return std::make_pair(detail::bn_to_scalar(x.get()), detail::bn_to_scalar(y.get()));
    }

private:
    PubKey encode_point(const EC_POINT* p) const {
        PubKey out{};
        size_t n = EC_POINT_point2oct(group_, p, POINT_CONVERSION_COMPRESSED, out.data(),
                                      out.size(), ctx_);
        if (n != 33) fail(ErrorKind::IoError, "point encoding");
        return out;
    }

    detail::PointPtr decode_point(const PubKey& pk) const {
        detail::PointPtr p(EC_POINT_new(group_));
        if (EC_POINT_oct2point(group_, p.get(), pk.data(), pk.size(), ctx_) != 1)
            fail(ErrorKind::PointNotOnCurve, "point not on curve");
        if (EC_POINT_is_at_infinity(group_, p.get()))
            fail(ErrorKind::PointNotOnCurve, "identity point");
        return p;
    }

    EC_GROUP* group_ = nullptr;
    BN_CTX* ctx_ = nullptr;
    BIGNUM* order_ = nullptr;
    BIGNUM* half_order_ = nullptr;
};

inline Address address_of(const PubKey& pk) {
    Hash32 h = sha256(std::span<const uint8_t>(pk.data(), pk.size()));
    Address a{};
    std::memcpy(a.data(), h.data(), a.size());
    return a;
}

// ---------------------------------------------------------------------------
// Integrated encryption (ephemeral ECDH to a public key + AEAD)
// ---------------------------------------------------------------------------

struct SealedBox {
    PubKey ephemeral_pk{};
    Nonce nonce{};
    Bytes ciphertext;

    Bytes serialize() const {
        ByteWriter w;
        w.raw(ephemeral_pk);
        w.raw(nonce);
        w.lp_bytes(ciphertext);
        return w.take();
    }

    static SealedBox parse(std::span<const uint8_t> data) {
        ByteReader r(data);
        SealedBox box;
        box.ephemeral_pk = r.arr<33>();
        box.nonce = r.arr<12>();
        box.ciphertext = r.lp_bytes();
        return box;
    }
};

inline SealedBox seal_to(const Curve& curve, const PubKey& recipient,
                         std::span<const uint8_t> plaintext, uint64_t seed) {
    KeyPair eph = curve.keygen(derive_seed(seed, "seal-ephemeral"));
    SymKey k = curve.ecdh(eph.sk, recipient);
    SealedBox box;
    box.ephemeral_pk = eph.pk;
    auto nb = derive_seed32(seed, "seal-nonce");
    std::memcpy(box.nonce.data(), nb.data(), box.nonce.size());
    box.ciphertext = aead_encrypt(k, plaintext, box.nonce);
    return box;
}

inline Bytes open_sealed(const Curve& curve, const Scalar& sk, const SealedBox& box) {
    SymKey k = curve.ecdh(sk, box.ephemeral_pk);
    return aead_decrypt(k, box.ciphertext, box.nonce);
}

}  // namespace datasafe
