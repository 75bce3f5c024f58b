#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "datasafe/bytes.hpp"
#include "datasafe/crypto.hpp"
#include "datasafe/errors.hpp"

namespace datasafe {

struct PufParams {
    size_t n_puf = 4096;      // SRAM block size in bits
    double flip_prob = 0.10;  // per-cell read-noise probability
    size_t key_bits = 256;
    size_t repetition = 15;   // must be odd; key_bits * repetition <= n_puf

    size_t used_bits() const { return key_bits * repetition; }

    void validate() const {
        if (flip_prob < 0.0 || flip_prob >= 0.5)
            fail(ErrorKind::ParseError, "flip_prob must be in [0, 0.5)");
        if (repetition % 2 == 0) fail(ErrorKind::ParseError, "repetition must be odd");
        if (used_bits() > n_puf) fail(ErrorKind::ParseError, "key_bits*repetition exceeds n_puf");
    }
};

/// Simulated SRAM power-up state. The ground truth stands in for the silicon
/// bias pattern; each read flips cells independently with flip_prob.
class SramPufModel {
public:
    SramPufModel(std::string device_id, BitVec ground_truth, double flip_prob)
        : device_id_(std::move(device_id)),
          ground_truth_(std::move(ground_truth)),
          flip_prob_(flip_prob) {
        if (flip_prob_ < 0.0 || flip_prob_ >= 0.5)
            fail(ErrorKind::ParseError, "flip_prob must be in [0, 0.5)");
    }

    static SramPufModel from_seed(std::string device_id, uint64_t identity_seed,
                                  const PufParams& params = {}) {
        params.validate();
        std::mt19937_64 rng(identity_seed);
        BitVec bits(params.n_puf);
        uint64_t word = 0;
        int avail = 0;
        for (size_t i = 0; i < bits.size(); ++i) {
            if (avail == 0) {
                word = rng();
                avail = 64;
            }
            bits[i] = word & 1;
            word >>= 1;
            --avail;
        }
        return SramPufModel(std::move(device_id), std::move(bits), params.flip_prob);
    }

    BitVec power_on_read(uint64_t noise_seed) const {
        BitVec out = ground_truth_;
        if (flip_prob_ == 0.0) return out;
        std::mt19937_64 rng(noise_seed);
        std::bernoulli_distribution flip(flip_prob_);
        for (auto& b : out) {
            if (flip(rng)) b ^= 1;
        }
        return out;
    }

    /// Enrollment read inside the secure manufacturing setting: exact.
    const BitVec& ground_truth() const { return ground_truth_; }
    const std::string& device_id() const { return device_id_; }
    double flip_prob() const { return flip_prob_; }
    size_t n_puf() const { return ground_truth_.size(); }

private:
    std::string device_id_;
    BitVec ground_truth_;
    double flip_prob_;
};

struct HelperData {
    BitVec syndrome;   // length n_puf; spare region past key_bits*repetition is zero
    uint8_t version = 1;
    Hash32 check{};    // binds decoded key bits to this exact syndrome

    Bytes serialize() const {
        ByteWriter w;
        w.u8(version);
        w.u32be(static_cast<uint32_t>(syndrome.size()));
        w.raw(pack_bits(syndrome));
        w.raw(check);
        return w.take();
    }

    static HelperData parse(ByteReader& r) {
        HelperData h;
        h.version = r.u8();
        uint32_t nbits = r.u32be();
        Bytes packed = r.raw((nbits + 7) / 8);
        h.syndrome = unpack_bits(packed, nbits);
        h.check = r.arr<32>();
        return h;
    }
};

struct DeviceSecret {
    SymKey key{};
    bool operator==(const DeviceSecret&) const = default;
};

struct WrappedKey {
    Nonce nonce{};
    Bytes ciphertext;

    Bytes serialize() const {
        ByteWriter w;
        w.raw(nonce);
        w.lp_bytes(ciphertext);
        return w.take();
    }

    static WrappedKey parse(ByteReader& r) {
        WrappedKey wk;
        wk.nonce = r.arr<12>();
        wk.ciphertext = r.lp_bytes();
        return wk;
    }
};

struct ChallengeResponsePair {
    Hash32 challenge{};
    Hash32 response{};
};

namespace detail {

inline Hash32 fe_key_hash(const Bytes& key_packed) {
    ByteWriter w;
    w.lp_string("DSFE-key");
    w.raw(key_packed);
    return sha256(w.bytes());
}

inline Hash32 fe_check_hash(const Bytes& key_packed, const BitVec& syndrome) {
    ByteWriter w;
    w.lp_string("DSFE-chk");
    w.lp_bytes(key_packed);
    w.raw(pack_bits(syndrome));
    return sha256(w.bytes());
}

}  // namespace detail

/// Code-offset fuzzy extractor: a pseudorandom key bit string is encoded with
/// an odd repetition code and XOR-masked by the reading; the mask is the
/// public helper. The secret is the conditioned hash of the key bits, and a
/// check hash over (key bits, syndrome) rejects mis-decodes instead of ever
/// returning a wrong secret.
inline std::pair<DeviceSecret, HelperData> fe_gen(const BitVec& reading,
                                                  const PufParams& params = {}) {
    params.validate();
    if (reading.size() != params.n_puf)
        fail(ErrorKind::WrongLength, "reading length != n_puf");

    // Key bits derived from the reading itself so the secret is a
    // deterministic function of (ground truth, helper).
    ByteWriter kw;
    kw.lp_string("DSFE-k");
    kw.raw(pack_bits(reading));
    HashStream ks(kw.take());
    BitVec key_bits(params.key_bits);
    for (auto& b : key_bits) b = ks.next_bit();

    HelperData helper;
    helper.syndrome.assign(params.n_puf, 0);
    for (size_t i = 0; i < params.key_bits; ++i) {
        for (size_t j = 0; j < params.repetition; ++j) {
            size_t pos = i * params.repetition + j;
            helper.syndrome[pos] = reading[pos] ^ key_bits[i];
        }
    }

    Bytes key_packed = pack_bits(key_bits);
    helper.check = detail::fe_check_hash(key_packed, helper.syndrome);
    DeviceSecret secret{detail::fe_key_hash(key_packed)};
    return {secret, helper};
}

inline DeviceSecret fe_rep(const BitVec& noisy_reading, const HelperData& helper,
                           const PufParams& params = {}) {
    params.validate();
    if (noisy_reading.size() != params.n_puf)
        fail(ErrorKind::WrongLength, "reading length != n_puf");
    if (helper.syndrome.size() != params.n_puf)
        fail(ErrorKind::WrongLength, "helper length != n_puf");

    BitVec key_bits(params.key_bits);
    for (size_t i = 0; i < params.key_bits; ++i) {
        size_t ones = 0;
        for (size_t j = 0; j < params.repetition; ++j) {
            size_t pos = i * params.repetition + j;
            ones += noisy_reading[pos] ^ helper.syndrome[pos];
        }
        key_bits[i] = ones * 2 > params.repetition;
    }

    Bytes key_packed = pack_bits(key_bits);
    if (detail::fe_check_hash(key_packed, helper.syndrome) != helper.check)
        fail(ErrorKind::ReproductionFailed, "fuzzy extractor integrity check failed");
    return DeviceSecret{detail::fe_key_hash(key_packed)};
}

/// Keyed PRF: the "obscuring" step applied to challenges and key material.
inline Hash32 puf_gen(const DeviceSecret& secret, const Hash32& input) {
    return hmac_sha256(std::span<const uint8_t>(secret.key.data(), secret.key.size()),
                       std::span<const uint8_t>(input.data(), input.size()));
}

inline Hash32 puf_respond(const DeviceSecret& secret, const Hash32& challenge) {
    Hash32 oc = puf_gen(secret, challenge);
    return sha256(std::span<const uint8_t>(oc.data(), oc.size()));
}

inline WrappedKey wrap_sk(const DeviceSecret& secret, const Scalar& sk, uint64_t nonce_seed) {
    WrappedKey wk;
    auto nb = derive_seed32(nonce_seed, "wrap-nonce");
    std::memcpy(wk.nonce.data(), nb.data(), wk.nonce.size());
    wk.ciphertext =
        aead_encrypt(secret.key, std::span<const uint8_t>(sk.data(), sk.size()), wk.nonce);
    return wk;
}

inline Scalar unwrap_sk(const DeviceSecret& secret, const WrappedKey& wk) {
    Bytes pt = aead_decrypt(secret.key, wk.ciphertext, wk.nonce);
    if (pt.size() != 32) fail(ErrorKind::AuthFailure, "wrapped key has wrong size");
    Scalar sk{};
    std::memcpy(sk.data(), pt.data(), 32);
    return sk;
}

// ---------------------------------------------------------------------------
// Device state record ("DSPF"). Ground truth is never serialized; the record
// holds only what real hardware would keep in nonvolatile memory.
// ---------------------------------------------------------------------------

struct DeviceRecord {
    std::string id;
    HelperData helper;
    WrappedKey wrapped_sk;

    Bytes serialize() const {
        ByteWriter w;
        w.raw(Bytes{'D', 'S', 'P', 'F'});
        w.u8(1);
        w.lp_string(id);
        w.raw(helper.serialize());
        w.raw(wrapped_sk.serialize());
        return w.take();
    }

    static DeviceRecord parse(std::span<const uint8_t> data) {
        ByteReader r(data);
        Bytes magic = r.raw(4);
        if (magic != Bytes{'D', 'S', 'P', 'F'})
            fail(ErrorKind::UnsupportedFormat, "bad device record magic");
        if (r.u8() != 1) fail(ErrorKind::UnsupportedFormat, "unknown device record version");
        DeviceRecord rec;
        rec.id = r.lp_string();
        rec.helper = HelperData::parse(r);
        rec.wrapped_sk = WrappedKey::parse(r);
        return rec;
    }
};

}  // namespace datasafe
