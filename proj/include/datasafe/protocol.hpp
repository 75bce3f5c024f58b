#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "datasafe/bmp.hpp"
#include "datasafe/bytes.hpp"
#include "datasafe/crypto.hpp"
#include "datasafe/errors.hpp"
#include "datasafe/ledger.hpp"
#include "datasafe/puf.hpp"
#include "datasafe/watermark.hpp"

namespace datasafe {

// ---------------------------------------------------------------------------
// In-process message bus with fault injection. Every byte crossing a party
// boundary is logged, which is what makes the location-key confidentiality
// scan possible.
// ---------------------------------------------------------------------------

struct BusMessage {
    std::string from;
    std::string to;
    std::string label;
    Bytes data;
};

class MessageBus {
public:
    using FaultFn = std::function<void(BusMessage&)>;

    void set_fault(FaultFn f) { fault_ = std::move(f); }

    /// Returns the message as delivered (faults applied); the log records the
    /// delivered form.
    const Bytes& send(const std::string& from, const std::string& to, const std::string& label,
                      Bytes data) {
        BusMessage m{from, to, label, std::move(data)};
        if (fault_) fault_(m);
        log_.push_back(std::move(m));
        return log_.back().data;
    }

    const std::vector<BusMessage>& log() const { return log_; }

private:
    std::vector<BusMessage> log_;
    FaultFn fault_;
};

inline bool contains_subsequence(const Bytes& haystack, std::span<const uint8_t> needle) {
    if (needle.empty() || haystack.size() < needle.size()) return false;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (std::memcmp(haystack.data() + i, needle.data(), needle.size()) == 0) return true;
    }
    return false;
}

/// True if any transcript message carries location-key material in the clear:
/// the DSLK magic or the 32-byte position seed.
inline bool transcript_leaks_location_key(const MessageBus& bus,
                                          const std::array<uint8_t, 32>& seed_x) {
    static const Bytes magic{'D', 'S', 'L', 'K'};
    for (const auto& m : bus.log()) {
        if (contains_subsequence(m.data, std::span<const uint8_t>(magic))) return true;
        if (contains_subsequence(m.data, std::span<const uint8_t>(seed_x.data(), seed_x.size())))
            return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Parties
// ---------------------------------------------------------------------------

/// A PUF-equipped device. The private key exists in cleartext only inside
/// method bodies; at rest it lives PUF-wrapped. Watermark embedding and
/// extraction are only reachable through these methods, standing in for the
/// hardware trust boundary.
class Device {
public:
    Device(std::string id, uint64_t identity_seed, uint64_t provision_seed, const Curve& curve,
           PufParams params = {})
        : curve_(&curve),
          params_(params),
          model_(SramPufModel::from_seed(id, identity_seed, params)) {
        // Manufacturing-time provisioning in the secure setting: fuzzy
        // extractor enrollment from the exact reading, then key wrapping.
        auto [secret, helper] = fe_gen(model_.ground_truth(), params_);
        helper_ = helper;
        KeyPair kp = curve.keygen(derive_seed(provision_seed, "device-key:" + id));
        pk_ = kp.pk;
        addr_ = address_of(pk_);
        wrapped_sk_ = wrap_sk(secret, kp.sk, derive_seed(provision_seed, "wrap:" + id));
    }

    const std::string& id() const { return model_.device_id(); }
    const PubKey& pk() const { return pk_; }
    const Address& addr() const { return addr_; }
    const SramPufModel& model() const { return model_; }
    const PufParams& params() const { return params_; }

    /// Reproduces the device secret from a fresh power-on read, retrying on
    /// decode failure up to max_reads times.
    DeviceSecret reproduce_secret(uint64_t noise_seed, int max_reads = 3) {
        last_read_attempts_ = 0;
        for (int i = 0; i < max_reads; ++i) {
            ++last_read_attempts_;
            BitVec reading =
                model_.power_on_read(derive_seed(noise_seed, "read-" + std::to_string(i)));
            try {
                return fe_rep(reading, helper_, params_);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::ReproductionFailed || i + 1 == max_reads) throw;
            }
        }
        fail(ErrorKind::ReproductionFailed, "unreachable");
    }

    int last_read_attempts() const { return last_read_attempts_; }

    Hash32 respond(const Hash32& challenge, uint64_t noise_seed) {
        DeviceSecret s = reproduce_secret(noise_seed);
        return puf_respond(s, challenge);
    }

    Signature sign_inside(std::span<const uint8_t> message, uint64_t noise_seed) {
        Scalar sk = unwrap_sk(reproduce_secret(noise_seed), wrapped_sk_);
        return curve_->sign(sk, message);
    }

    Bytes open_inside(const SealedBox& box, uint64_t noise_seed) {
        Scalar sk = unwrap_sk(reproduce_secret(noise_seed), wrapped_sk_);
        return open_sealed(*curve_, sk, box);
    }

    EmbedResult embed_inside(const Image24& image, const Watermark& wm,
                             const std::array<uint8_t, 32>& seed_x, uint64_t fill_seed,
                             const RuleTable& rules = default_rule_table(),
                             uint8_t target_channel = 2) {
        return embed(image, wm, seed_x, fill_seed, rules, target_channel);
    }

    /// Decrypts the delivered location key and extracts the watermark without
    /// the key ever leaving the device boundary.
    Watermark extract_inside(const Image24& covered, const SealedBox& sealed_lk,
                             uint64_t noise_seed) {
        Bytes lk_bytes = open_inside(sealed_lk, noise_seed);
        LocationKey lk = LocationKey::parse(lk_bytes);
        return extract(covered, lk);
    }

    DeviceRecord record() const { return DeviceRecord{id(), helper_, wrapped_sk_}; }

    const HelperData& helper() const { return helper_; }

private:
    const Curve* curve_;
    PufParams params_;
    SramPufModel model_;
    HelperData helper_;
    WrappedKey wrapped_sk_;
    PubKey pk_{};
    Address addr_{};
    int last_read_attempts_ = 0;
};

class Manufacturer {
public:
    /// Challenge-response enrollment in the secure manufacturing setting;
    /// the database is write-once per device id.
    SecureDb::Entry enroll(Device& device, uint64_t challenge_seed) {
        Hash32 c = derive_seed32(challenge_seed, "challenge:" + device.id());
        Hash32 r = device.respond(c, derive_seed(challenge_seed, "enroll-noise:" + device.id()));
        db_.add(device.id(), c, r);
        return db_.lookup(device.id());
    }

    const SecureDb& db() const { return db_; }
    SecureDb& db() { return db_; }

private:
    SecureDb db_;
};

class CertAuthority {
public:
    CertAuthority(uint64_t key_seed, const SecureDb& db, const Curve& curve)
        : curve_(&curve), db_(&db), kp_(curve.keygen(derive_seed(key_seed, "ca-key"))) {}

    const PubKey& pk() const { return kp_.pk; }
    Address addr() const { return address_of(kp_.pk); }
    const SecureDb& db() const { return *db_; }

    /// ECDH against the device's ephemeral key; sk_ca never leaves this class.
    SymKey session_key(const PubKey& eph_pk) const { return curve_->ecdh(kp_.sk, eph_pk); }

    Transaction make_device_register(const std::string& id, const PubKey& device_pk,
                                     uint64_t tick) const {
        Transaction tx;
        tx.kind = TxKind::DeviceRegister;
        tx.sender = addr();
        tx.timestamp = tick;
        tx.payload = DeviceRegisterPayload{id, device_pk};
        tx.seal(*curve_, kp_.sk);
        return tx;
    }

private:
    const Curve* curve_;
    const SecureDb* db_;
    KeyPair kp_;
};

// ---------------------------------------------------------------------------
// Enrollment / registration flows
// ---------------------------------------------------------------------------

/// Full registration handshake: ECDH session key, encrypted challenge out,
/// encrypted response back, database check, DeviceRegister on match.
inline RegistryEntry register_identity(Device& device, const CertAuthority& ca, Ledger& ledger,
                                       MessageBus& bus, uint64_t session_seed) {
    const Curve& curve = Curve::get();

    KeyPair eph = curve.keygen(derive_seed(session_seed, "handshake-eph"));
    ByteWriter req;
    req.lp_string(device.id());
    req.raw(device.pk());
    req.raw(eph.pk);
    Bytes delivered = bus.send(device.id(), "CA", "register-request", req.take());

    // CA side.
    ByteReader rr(delivered);
    std::string id = rr.lp_string();
    PubKey device_pk = rr.arr<33>();
    PubKey eph_pk = rr.arr<33>();
    const SecureDb::Entry& entry = ca.db().lookup(id);
    SymKey k = ca.session_key(eph_pk);

    Nonce n1{};
    auto n1b = derive_seed32(session_seed, "nonce-challenge");
    std::memcpy(n1.data(), n1b.data(), n1.size());
    ByteWriter cw;
    cw.raw(n1);
    cw.raw(aead_encrypt(k, std::span<const uint8_t>(entry.challenge.data(), 32), n1));
    Bytes challenge_msg = bus.send("CA", device.id(), "challenge-ct", cw.take());

    // Device side.
    SymKey k_dev = curve.ecdh(eph.sk, ca.pk());
    ByteReader cr(challenge_msg);
    Nonce rn1 = cr.arr<12>();
    Bytes c_pt = aead_decrypt(k_dev, cr.raw(cr.remaining()), rn1);
    if (c_pt.size() != 32) fail(ErrorKind::AuthFailure, "challenge has wrong size");
    Hash32 c{};
    std::memcpy(c.data(), c_pt.data(), 32);
    Hash32 r = device.respond(c, derive_seed(session_seed, "register-noise"));

    Nonce n2{};
    auto n2b = derive_seed32(session_seed, "nonce-response");
    std::memcpy(n2.data(), n2b.data(), n2.size());
    ByteWriter rw;
    rw.raw(n2);
    rw.raw(aead_encrypt(k_dev, std::span<const uint8_t>(r.data(), 32), n2));
    Bytes response_msg = bus.send(device.id(), "CA", "response-ct", rw.take());

    // CA side: check the response against the secure database.
    ByteReader resp(response_msg);
    Nonce rn2 = resp.arr<12>();
    Bytes r_pt = aead_decrypt(k, resp.raw(resp.remaining()), rn2);
    Hash32 r_recv{};
    if (r_pt.size() != 32) fail(ErrorKind::AuthFailure, "response has wrong size");
    std::memcpy(r_recv.data(), r_pt.data(), 32);
    if (r_recv != entry.response) {
        bus.send("CA", device.id(), "cancellation", Bytes{});
        fail(ErrorKind::ResponseMismatch, "challenge-response mismatch for " + id);
    }

    ledger.advance(1);  // each accepted handshake is its own logical event
    Transaction tx = ca.make_device_register(id, device_pk, ledger.now());
    ledger.submit(tx);
    bus.send("CA", device.id(), "acceptance", Bytes(tx.txid.begin(), tx.txid.end()));
    return *ledger.find_device(id);
}

// ---------------------------------------------------------------------------
// Copyright registration and transfer
// ---------------------------------------------------------------------------

inline TxId register_copyright(Ledger& ledger, Device& holder, const Bytes& media,
                               uint64_t noise_seed) {
    // Distinct tick per attempt: a repeated registration is a new transaction
    // that gets rejected on its digest, not silently deduplicated by txid.
    ledger.advance(1);
    Transaction tx;
    tx.kind = TxKind::CopyrightRegister;
    tx.sender = holder.addr();
    tx.timestamp = ledger.now();
    tx.payload = CopyrightRegisterPayload{sha256(media), holder.addr()};
    tx.signature = holder.sign_inside(tx.signing_bytes(), noise_seed);
    tx.txid = sha256(tx.canonical());
    return ledger.submit(tx);
}

enum class TransferStage {
    Negotiated,
    ContractDeployed,
    Paid,
    MarkerRecorded,
    Delivered,
    Verified,
    Settled,
    Aborted,
};

inline const char* transfer_stage_name(TransferStage s) {
    switch (s) {
        case TransferStage::Negotiated: return "Negotiated";
        case TransferStage::ContractDeployed: return "ContractDeployed";
        case TransferStage::Paid: return "Paid";
        case TransferStage::MarkerRecorded: return "MarkerRecorded";
        case TransferStage::Delivered: return "Delivered";
        case TransferStage::Verified: return "Verified";
        case TransferStage::Settled: return "Settled";
        case TransferStage::Aborted: return "Aborted";
    }
    return "?";
}

struct TransferTerms {
    uint64_t price = 0;
    uint64_t pay_deadline = 0;
    uint64_t deliver_deadline = 0;
    uint64_t confirm_deadline = 0;
};

struct TransferFaults {
    bool tamper_delivery = false;
    bool forge_watermark_key = false;
};

struct TransferOutcome {
    TransferStage final_stage = TransferStage::Negotiated;
    TransferStage failed_at = TransferStage::Negotiated;  // meaningful when Aborted
    std::optional<ErrorKind> error;
    bool refunded = false;
    TxId contract_id{};
    TxId update_txid{};
    CopyrightTransferMarker ctm;
    Bytes delivered_file;                    // f' as produced by the seller
    std::array<uint8_t, 32> lk_seed_x{};     // for the confidentiality scan
};

struct DeliveryPackage {
    Bytes covered_file;
    Bytes sealed_location_key;  // SealedBox bytes
};

/// Buyer-side check: on-chain digest match plus watermark signature
/// verification under the seller's registered key. Runs inside the buyer's
/// device boundary; the location key never leaves it.
inline void verify_received(Device& buyer, const Ledger& ledger, const DeliveryPackage& package,
                            const TxId& update_txid, uint64_t noise_seed) {
    const Transaction& tx = ledger.get(update_txid);
    const auto& payload = std::get<CopyrightUpdatePayload>(tx.payload);

    if (sha256(package.covered_file) != payload.new_digest)
        fail(ErrorKind::HashMismatch, "delivered file does not match the on-chain digest");

    const RegistryEntry* seller = ledger.find_device(payload.ctm.seller);
    if (!seller) fail(ErrorKind::UnknownSender, "ctm seller is not a registered device");

    Image24 covered = load_bmp(package.covered_file);
    SealedBox box = SealedBox::parse(package.sealed_location_key);
    Watermark wm;
    try {
        wm = buyer.extract_inside(covered, box, noise_seed);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ReproductionFailed) throw;
        fail(ErrorKind::WatermarkInvalid, "watermark extraction failed");
    }
    Signature sig;
    try {
        sig = watermark_to_signature(wm);
    } catch (const Error&) {
        fail(ErrorKind::WatermarkInvalid, "recovered bits are not a signature");
    }
    if (!Curve::get().verify(seller->pk, payload.ctm.canonical(), sig))
        fail(ErrorKind::WatermarkInvalid, "watermark signature does not verify under seller key");
}

/// The five-step transfer: deploy, fund, marker + embed + TX_u, deliver,
/// verify + confirm. Any failure aborts the session; if tokens are frozen the
/// buyer reclaims them through the deadline refund path.
inline TransferOutcome run_transfer(Ledger& ledger, MessageBus& bus, Device& seller, Device& buyer,
                                    const Bytes& media, const TxId& marker,
                                    const TransferTerms& terms, uint64_t seed,
                                    const TransferFaults& faults = {}) {
    const Curve& curve = Curve::get();
    TransferOutcome out;
    TransferStage stage = TransferStage::Negotiated;
    try {
        // Initiate transaction: terms go into the escrow contract.
        Transaction deploy;
        deploy.kind = TxKind::ContractDeploy;
        deploy.sender = buyer.addr();
        deploy.timestamp = ledger.now();
        deploy.payload = ContractDeployPayload{seller.addr(), buyer.addr(), terms.price,
                                               marker,        terms.deliver_deadline,
                                               terms.pay_deadline, terms.confirm_deadline};
        deploy.signature = buyer.sign_inside(deploy.signing_bytes(), derive_seed(seed, "deploy"));
        deploy.txid = sha256(deploy.canonical());
        out.contract_id = ledger.submit(deploy);
        stage = TransferStage::ContractDeployed;

        // Pay for media.
        Transaction fund;
        fund.kind = TxKind::ContractFund;
        fund.sender = buyer.addr();
        fund.timestamp = ledger.now();
        fund.payload = ContractFundPayload{out.contract_id, terms.price};
        fund.signature = buyer.sign_inside(fund.signing_bytes(), derive_seed(seed, "fund"));
        fund.txid = sha256(fund.canonical());
        ledger.submit(fund);
        stage = TransferStage::Paid;

        // Generate copyright transfer marker, embed, record TX_u.
        out.ctm = CopyrightTransferMarker{marker, seller.addr(), buyer.addr()};
        Signature wm_sig;
        if (faults.forge_watermark_key) {
            KeyPair rogue = curve.keygen(derive_seed(seed, "rogue-key"));
            wm_sig = curve.sign(rogue.sk, out.ctm.canonical());
        } else {
            wm_sig = seller.sign_inside(out.ctm.canonical(), derive_seed(seed, "wm-sign"));
        }
        Watermark wm = signature_to_watermark(wm_sig);

        Image24 cover = load_bmp(media);
        out.lk_seed_x = derive_seed32(seed, "wm-seed-x");
        EmbedResult embedded = seller.embed_inside(cover, wm, out.lk_seed_x,
                                                   derive_seed(seed, "wm-fill"));
        out.delivered_file = save_bmp(embedded.covered);

        Transaction update;
        update.kind = TxKind::CopyrightUpdate;
        update.sender = seller.addr();
        update.timestamp = ledger.now();
        update.payload = CopyrightUpdatePayload{sha256(out.delivered_file), out.ctm};
        update.signature =
            seller.sign_inside(update.signing_bytes(), derive_seed(seed, "update-sign"));
        update.txid = sha256(update.canonical());
        out.update_txid = ledger.submit(update);
        stage = TransferStage::MarkerRecorded;

        // Deliver media off-chain: the file in the clear, the key sealed.
        DeliveryPackage package;
        package.covered_file =
            bus.send(seller.id(), buyer.id(), "deliver-file", out.delivered_file);
        SealedBox sealed = seal_to(curve, buyer.pk(), embedded.key.serialize(),
                                   derive_seed(seed, "lk-seal"));
        package.sealed_location_key =
            bus.send(seller.id(), buyer.id(), "deliver-lk", sealed.serialize());
        stage = TransferStage::Delivered;

        // Verification and transfer.
        verify_received(buyer, ledger, package, out.update_txid, derive_seed(seed, "verify"));
        stage = TransferStage::Verified;

        Transaction confirm;
        confirm.kind = TxKind::ContractConfirm;
        confirm.sender = buyer.addr();
        confirm.timestamp = ledger.now();
        confirm.payload = ContractConfirmPayload{out.contract_id};
        confirm.signature =
            buyer.sign_inside(confirm.signing_bytes(), derive_seed(seed, "confirm"));
        confirm.txid = sha256(confirm.canonical());
        ledger.submit(confirm);
        bus.send(buyer.id(), seller.id(), "confirmation", Bytes(confirm.txid.begin(),
                                                                confirm.txid.end()));
        stage = TransferStage::Settled;
        out.final_stage = stage;
        return out;
    } catch (const Error& e) {
        out.failed_at = stage;
        out.error = e.kind();
        out.final_stage = TransferStage::Aborted;
        bus.send(buyer.id(), seller.id(), "cancel", Bytes{});
    }

    // Refund path: once the relevant deadline has passed, frozen tokens go
    // back to the buyer.
    if (out.contract_id != TxId{}) {
        try {
            const EscrowContract& c = ledger.contract(out.contract_id);
            if (c.state == EscrowState::Funded || c.state == EscrowState::Delivered ||
                c.state == EscrowState::Deployed) {
                uint64_t latest = std::max({c.pay_deadline, c.deliver_deadline, c.confirm_deadline});
                if (ledger.now() <= latest) ledger.advance(latest + 1 - ledger.now());
                Transaction refund;
                refund.kind = TxKind::ContractRefund;
                refund.sender = buyer.addr();
                refund.timestamp = ledger.now();
                refund.payload = ContractRefundPayload{out.contract_id};
                refund.signature =
                    buyer.sign_inside(refund.signing_bytes(), derive_seed(seed, "refund"));
                refund.txid = sha256(refund.canonical());
                ledger.submit(refund);
                out.refunded = true;
            }
        } catch (const Error&) {
            // Refund not possible (e.g. contract never deployed); leave as is.
        }
    }
    return out;
}

/// Two-hop resale: A→B on the original file, then B→C on the watermarked f'.
/// Multi-hop provenance comes from the on-chain marker chain; the inner A→B
/// watermark in f'' is not expected to survive the second embedding.
struct ResaleOutcome {
    TransferOutcome first;
    TransferOutcome second;
    std::vector<TraceEntry> trace;
};

inline ResaleOutcome resale_chain(Ledger& ledger, MessageBus& bus, Device& a, Device& b, Device& c,
                                  const Bytes& media, const TxId& marker,
                                  const TransferTerms& terms, uint64_t seed) {
    ResaleOutcome out;
    out.first = run_transfer(ledger, bus, a, b, media, marker, terms, derive_seed(seed, "hop-1"));
    if (out.first.final_stage != TransferStage::Settled) return out;
    TransferTerms terms2 = terms;
    uint64_t shift = ledger.now();
    terms2.pay_deadline += shift;
    terms2.deliver_deadline += shift;
    terms2.confirm_deadline += shift;
    out.second = run_transfer(ledger, bus, b, c, out.first.delivered_file, out.first.update_txid,
                              terms2, derive_seed(seed, "hop-2"));
    if (out.second.final_stage != TransferStage::Settled) return out;
    out.trace = ledger.trace(out.second.update_txid);
    return out;
}

}  // namespace datasafe
