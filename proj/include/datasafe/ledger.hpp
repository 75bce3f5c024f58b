#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "datasafe/bytes.hpp"
#include "datasafe/crypto.hpp"
#include "datasafe/errors.hpp"

namespace datasafe {

enum class TxKind : uint8_t {
    DeviceRegister = 1,
    CopyrightRegister = 2,
    CopyrightUpdate = 3,
    ContractDeploy = 4,
    ContractFund = 5,
    ContractConfirm = 6,
    ContractRefund = 7,
};

/// Links a transfer to the marker being sold and both parties. The signed
/// hash of its canonical bytes is what gets embedded as the watermark.
struct CopyrightTransferMarker {
    TxId prev_txid{};
    Address seller{};
    Address buyer{};

    Bytes canonical() const {
        ByteWriter w;
        w.raw(prev_txid);
        w.raw(seller);
        w.raw(buyer);
        return w.take();
    }

    static CopyrightTransferMarker parse(ByteReader& r) {
        CopyrightTransferMarker ctm;
        ctm.prev_txid = r.arr<32>();
        ctm.seller = r.arr<20>();
        ctm.buyer = r.arr<20>();
        return ctm;
    }

    bool operator==(const CopyrightTransferMarker&) const = default;
};

struct DeviceRegisterPayload {
    std::string id;
    PubKey pk{};
};

struct CopyrightRegisterPayload {
    Digest digest{};
    Address holder{};
};

struct CopyrightUpdatePayload {
    Digest new_digest{};
    CopyrightTransferMarker ctm;
};

struct ContractDeployPayload {
    Address seller{};
    Address buyer{};
    uint64_t price = 0;
    TxId marker{};  // the marker txid this escrow settles
    uint64_t deliver_deadline = 0;
    uint64_t pay_deadline = 0;
    uint64_t confirm_deadline = 0;
};

struct ContractFundPayload {
    TxId contract_id{};
    uint64_t amount = 0;
};

struct ContractConfirmPayload {
    TxId contract_id{};
};

struct ContractRefundPayload {
    TxId contract_id{};
};

using TxPayload =
    std::variant<DeviceRegisterPayload, CopyrightRegisterPayload, CopyrightUpdatePayload,
                 ContractDeployPayload, ContractFundPayload, ContractConfirmPayload,
                 ContractRefundPayload>;

struct Transaction {
    TxKind kind = TxKind::DeviceRegister;
    Address sender{};
    uint64_t timestamp = 0;  // logical tick
    TxPayload payload;
    Signature signature;
    TxId txid{};

    Bytes payload_bytes() const {
        ByteWriter w;
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, DeviceRegisterPayload>) {
                    w.lp_string(p.id);
                    w.raw(p.pk);
                } else if constexpr (std::is_same_v<T, CopyrightRegisterPayload>) {
                    w.raw(p.digest);
                    w.raw(p.holder);
                } else if constexpr (std::is_same_v<T, CopyrightUpdatePayload>) {
                    w.raw(p.new_digest);
                    w.raw(p.ctm.canonical());
                } else if constexpr (std::is_same_v<T, ContractDeployPayload>) {
                    w.raw(p.seller);
                    w.raw(p.buyer);
                    w.u64be(p.price);
                    w.raw(p.marker);
                    w.u64be(p.deliver_deadline);
                    w.u64be(p.pay_deadline);
                    w.u64be(p.confirm_deadline);
                } else if constexpr (std::is_same_v<T, ContractFundPayload>) {
                    w.raw(p.contract_id);
                    w.u64be(p.amount);
                } else if constexpr (std::is_same_v<T, ContractConfirmPayload>) {
                    w.raw(p.contract_id);
                } else if constexpr (std::is_same_v<T, ContractRefundPayload>) {
                    w.raw(p.contract_id);
                }
            },
            payload);
        return w.take();
    }

    /// The message the sender signs: everything but the signature.
    Bytes signing_bytes() const {
        ByteWriter w;
        w.u8(static_cast<uint8_t>(kind));
        w.raw(sender);
        w.u64be(timestamp);
        w.lp_bytes(payload_bytes());
        return w.take();
    }

    /// Full canonical record; txid = SHA-256 of this.
    Bytes canonical() const {
        ByteWriter w;
        w.raw(signing_bytes());
        w.raw(signature.encode_bytes());
        return w.take();
    }

    void seal(const Curve& curve, const Scalar& sk) {
        signature = curve.sign(sk, signing_bytes());
        txid = sha256(canonical());
    }

    static Transaction parse(std::span<const uint8_t> data) {
        ByteReader r(data);
        Transaction tx;
        uint8_t kind = r.u8();
        if (kind < 1 || kind > 7) fail(ErrorKind::ParseError, "unknown tx kind");
        tx.kind = static_cast<TxKind>(kind);
        tx.sender = r.arr<20>();
        tx.timestamp = r.u64be();
        Bytes pb = r.lp_bytes();
        ByteReader pr(pb);
        switch (tx.kind) {
            case TxKind::DeviceRegister: {
                DeviceRegisterPayload p;
                p.id = pr.lp_string();
                p.pk = pr.arr<33>();
                tx.payload = p;
                break;
            }
            case TxKind::CopyrightRegister: {
                CopyrightRegisterPayload p;
                p.digest = pr.arr<32>();
                p.holder = pr.arr<20>();
                tx.payload = p;
                break;
            }
            case TxKind::CopyrightUpdate: {
                CopyrightUpdatePayload p;
                p.new_digest = pr.arr<32>();
                p.ctm = CopyrightTransferMarker::parse(pr);
                tx.payload = p;
                break;
            }
            case TxKind::ContractDeploy: {
                ContractDeployPayload p;
                p.seller = pr.arr<20>();
                p.buyer = pr.arr<20>();
                p.price = pr.u64be();
                p.marker = pr.arr<32>();
                p.deliver_deadline = pr.u64be();
                p.pay_deadline = pr.u64be();
                p.confirm_deadline = pr.u64be();
                tx.payload = p;
                break;
            }
            case TxKind::ContractFund: {
                ContractFundPayload p;
                p.contract_id = pr.arr<32>();
                p.amount = pr.u64be();
                tx.payload = p;
                break;
            }
            case TxKind::ContractConfirm: {
                ContractConfirmPayload p;
                p.contract_id = pr.arr<32>();
                tx.payload = p;
                break;
            }
            case TxKind::ContractRefund: {
                ContractRefundPayload p;
                p.contract_id = pr.arr<32>();
                tx.payload = p;
                break;
            }
        }
        if (!pr.done()) fail(ErrorKind::ParseError, "trailing payload bytes");
        tx.signature = Signature::decode(r.raw(64));
        if (!r.done()) fail(ErrorKind::ParseError, "trailing record bytes");
        tx.txid = sha256(tx.canonical());
        return tx;
    }
};

enum class EscrowState : uint8_t { Deployed, Funded, Delivered, Settled, Refunded };

inline const char* escrow_state_name(EscrowState s) {
    switch (s) {
        case EscrowState::Deployed: return "Deployed";
        case EscrowState::Funded: return "Funded";
        case EscrowState::Delivered: return "Delivered";
        case EscrowState::Settled: return "Settled";
        case EscrowState::Refunded: return "Refunded";
    }
    return "?";
}

struct EscrowContract {
    TxId contract_id{};
    Address seller{};
    Address buyer{};
    uint64_t price = 0;
    TxId marker{};
    uint64_t deliver_deadline = 0;
    uint64_t pay_deadline = 0;
    uint64_t confirm_deadline = 0;
    EscrowState state = EscrowState::Deployed;
    uint64_t balance = 0;                 // frozen tokens
    std::optional<TxId> transfer_txid;    // the TX_u recorded under this escrow
};

enum class DeviceStatus : uint8_t { Active, Revoked };

struct RegistryEntry {
    std::string id;
    PubKey pk{};
    Address addr{};
    DeviceStatus status = DeviceStatus::Active;
};

/// CA-side, off-chain challenge-response archive; write-once per id.
class SecureDb {
public:
    void add(const std::string& id, const Hash32& challenge, const Hash32& response) {
        if (records_.count(id)) fail(ErrorKind::AlreadyRegistered, "secure db entry exists: " + id);
        records_[id] = {challenge, response};
    }

    struct Entry {
        Hash32 challenge{};
        Hash32 response{};
    };

    const Entry& lookup(const std::string& id) const {
        auto it = records_.find(id);
        if (it == records_.end()) fail(ErrorKind::UnknownId, "no secure db entry for " + id);
        return it->second;
    }

    bool contains(const std::string& id) const { return records_.count(id) != 0; }

private:
    std::map<std::string, Entry> records_;
};

struct Block {
    uint64_t height = 0;
    Hash32 prev_hash{};
    uint64_t tick = 0;
    std::vector<TxId> txids;
    Hash32 hash{};

    Hash32 compute_hash() const {
        ByteWriter w;
        w.u64be(height);
        w.raw(prev_hash);
        w.u64be(tick);
        w.u32be(static_cast<uint32_t>(txids.size()));
        for (const auto& id : txids) w.raw(id);
        return sha256(w.bytes());
    }
};

struct TraceEntry {
    Address holder{};
    TxId txid{};

    bool operator==(const TraceEntry&) const = default;
};

/// Single sealing node with logical ticks: every accepted submission becomes
/// a block immediately, the store is append-only, and state (registry,
/// balances, escrow, marker chains) is a pure fold over the records.
class Ledger {
public:
    Ledger(PubKey ca_pk, std::vector<std::pair<Address, uint64_t>> genesis_balances,
           const Curve& curve = Curve::get())
        : curve_(&curve), ca_pk_(ca_pk), ca_addr_(address_of(ca_pk)), genesis_(genesis_balances) {
        for (const auto& [addr, amount] : genesis_balances) {
            balances_[addr] += amount;
            total_supply_ += amount;
        }
    }

    uint64_t now() const { return tick_; }
    void advance(uint64_t ticks) { tick_ += ticks; }

    const PubKey& ca_pk() const { return ca_pk_; }
    const Address& ca_addr() const { return ca_addr_; }

    // -- submission -------------------------------------------------------

    TxId submit(const Transaction& tx) {
        if (tx_index_.count(tx.txid)) fail(ErrorKind::DuplicateTx, "txid already on chain");
        if (tx.txid != sha256(tx.canonical())) fail(ErrorKind::ParseError, "txid mismatch");

        const PubKey* signer_pk = nullptr;
        if (tx.kind == TxKind::DeviceRegister) {
            if (tx.sender != ca_addr_)
                fail(ErrorKind::UnknownSender, "device registration must come from the CA");
            signer_pk = &ca_pk_;
        } else {
            auto it = addr_index_.find(tx.sender);
            if (it == addr_index_.end())
                fail(ErrorKind::UnknownSender, "sender address not registered");
            signer_pk = &registry_.at(it->second).pk;
        }
        if (!curve_->verify(*signer_pk, tx.signing_bytes(), tx.signature))
            fail(ErrorKind::BadSignature, "transaction signature invalid");

        // Validate before mutating anything.
        std::visit([&](const auto& p) { validate(tx, p); }, tx.payload);
        std::visit([&](const auto& p) { apply(tx, p); }, tx.payload);

        if (tx.timestamp > tick_) tick_ = tx.timestamp;
        seal_block(tx);
        return tx.txid;
    }

    // -- queries ----------------------------------------------------------

    const Transaction& get(const TxId& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) fail(ErrorKind::UnknownMarker, "no such transaction");
        return txs_[it->second];
    }

    bool has_tx(const TxId& txid) const { return tx_index_.count(txid) != 0; }

    uint64_t balance(const Address& addr) const {
        auto it = balances_.find(addr);
        return it == balances_.end() ? 0 : it->second;
    }

    const EscrowContract& contract(const TxId& contract_id) const {
        auto it = contracts_.find(contract_id);
        if (it == contracts_.end()) fail(ErrorKind::UnknownMarker, "no such contract");
        return it->second;
    }

    const RegistryEntry* find_device(const std::string& id) const {
        auto it = registry_.find(id);
        return it == registry_.end() ? nullptr : &it->second;
    }

    const RegistryEntry* find_device(const Address& addr) const {
        auto it = addr_index_.find(addr);
        return it == addr_index_.end() ? nullptr : &registry_.at(it->second);
    }

    void revoke_device(const std::string& id) {
        auto it = registry_.find(id);
        if (it == registry_.end()) fail(ErrorKind::UnknownId, "no such device");
        it->second.status = DeviceStatus::Revoked;
    }

    std::optional<TxId> marker_for_digest(const Digest& digest) const {
        auto it = digest_index_.find(digest);
        if (it == digest_index_.end()) return std::nullopt;
        return it->second;
    }

    /// Current holder of the chain containing this marker.
    Address holder_of(const TxId& marker_txid) const {
        const MarkerState& tip = tip_of(marker_txid);
        return tip.holder;
    }

    std::vector<TraceEntry> trace(const TxId& marker_txid) const {
        auto it = markers_.find(marker_txid);
        if (it == markers_.end()) fail(ErrorKind::UnknownMarker, "no such copyright marker");
        // Back to the root, then forward along live links.
        const MarkerState* m = &it->second;
        while (m->prev) m = &markers_.at(*m->prev);
        std::vector<TraceEntry> out;
        for (;;) {
            out.push_back({m->holder, m->self});
            if (!m->next) break;
            m = &markers_.at(*m->next);
        }
        return out;
    }

    std::vector<TraceEntry> trace_digest(const Digest& digest) const {
        auto m = marker_for_digest(digest);
        if (!m) fail(ErrorKind::UnknownMarker, "digest not on chain");
        return trace(*m);
    }

    const std::vector<Block>& blocks() const { return blocks_; }
    const std::vector<Transaction>& transactions() const { return txs_; }

    uint64_t total_supply() const { return total_supply_; }

    /// Token conservation: genesis supply equals balances plus frozen escrow.
    bool audit_balances() const {
        uint64_t sum = 0;
        for (const auto& [addr, amount] : balances_) sum += amount;
        for (const auto& [id, c] : contracts_) sum += c.balance;
        return sum == total_supply_;
    }

    bool audit_chain() const {
        Hash32 prev{};
        for (const auto& b : blocks_) {
            if (b.prev_hash != prev || b.hash != b.compute_hash()) return false;
            prev = b.hash;
        }
        return true;
    }

    // -- persistence ------------------------------------------------------

    Bytes header_bytes() const {
        ByteWriter w;
        w.raw(Bytes{'D', 'S', 'L', 'G'});
        w.u8(1);
        w.raw(ca_pk_);
        w.u32be(static_cast<uint32_t>(genesis_.size()));
        for (const auto& [addr, amount] : genesis_) {
            w.raw(addr);
            w.u64be(amount);
        }
        return w.take();
    }

    Bytes serialize() const {
        ByteWriter w;
        Bytes header = header_bytes();
        w.lp_bytes(header);
        Hash32 h = sha256(header);
        for (const auto& tx : txs_) {
            Bytes rec = tx.canonical();
            w.lp_bytes(rec);
            ByteWriter hw;
            hw.raw(h);
            hw.raw(rec);
            h = sha256(hw.bytes());
            w.raw(h);
        }
        return w.take();
    }

    static Ledger deserialize(std::span<const uint8_t> data, const Curve& curve = Curve::get()) {
        ByteReader r(data);
        Bytes header = r.lp_bytes();
        ByteReader hr(header);
        Bytes magic = hr.raw(4);
        if (magic != Bytes{'D', 'S', 'L', 'G'})
            fail(ErrorKind::UnsupportedFormat, "bad ledger magic");
        if (hr.u8() != 1) fail(ErrorKind::UnsupportedFormat, "unknown ledger version");
        PubKey ca_pk = hr.arr<33>();
        uint32_t n = hr.u32be();
        std::vector<std::pair<Address, uint64_t>> genesis;
        for (uint32_t i = 0; i < n; ++i) {
            Address a = hr.arr<20>();
            uint64_t amount = hr.u64be();
            genesis.emplace_back(a, amount);
        }
        if (!hr.done()) fail(ErrorKind::ParseError, "trailing header bytes");

        Ledger ledger(ca_pk, genesis, curve);
        Hash32 h = sha256(header);
        while (!r.done()) {
            Bytes rec = r.lp_bytes();
            ByteWriter hw;
            hw.raw(h);
            hw.raw(rec);
            h = sha256(hw.bytes());
            Hash32 stored = r.arr<32>();
            if (stored != h) fail(ErrorKind::ParseError, "ledger record hash chain broken");
            Transaction tx = Transaction::parse(rec);
            if (tx.timestamp > ledger.tick_) ledger.tick_ = tx.timestamp;
            ledger.submit(tx);
        }
        return ledger;
    }

    void save(const std::string& path) const {
        Bytes data = serialize();
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorKind::IoError, "cannot open " + path);
        f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!f) fail(ErrorKind::IoError, "write failed: " + path);
    }

    static Ledger load(const std::string& path, const Curve& curve = Curve::get()) {
        std::ifstream f(path, std::ios::binary);
        if (!f) fail(ErrorKind::IoError, "cannot open " + path);
        Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        return deserialize(data, curve);
    }

private:
    struct MarkerState {
        TxId self{};
        Digest digest{};
        Address holder{};
        std::optional<TxId> prev;
        std::optional<TxId> next;
        bool voided = false;
    };

    const MarkerState& tip_of(const TxId& marker_txid) const {
        auto it = markers_.find(marker_txid);
        if (it == markers_.end()) fail(ErrorKind::UnknownMarker, "no such copyright marker");
        const MarkerState* m = &it->second;
        while (m->next) m = &markers_.at(*m->next);
        return *m;
    }

    // -- validation (no state changes) ------------------------------------

    void validate(const Transaction& tx, const DeviceRegisterPayload& p) const {
        if (registry_.count(p.id)) fail(ErrorKind::AlreadyRegistered, "device id already registered");
        if (addr_index_.count(address_of(p.pk)))
            fail(ErrorKind::AlreadyRegistered, "device address already registered");
        (void)tx;
    }

    void validate(const Transaction& tx, const CopyrightRegisterPayload& p) const {
        if (tx.sender != p.holder)
            fail(ErrorKind::BadSignature, "registration must be sent by the holder");
        auto it = digest_index_.find(p.digest);
        if (it != digest_index_.end() && !markers_.at(it->second).voided)
            fail(ErrorKind::DuplicateDigest, "file digest already registered");
    }

    void validate(const Transaction& tx, const CopyrightUpdatePayload& p) const {
        auto it = markers_.find(p.ctm.prev_txid);
        if (it == markers_.end()) fail(ErrorKind::UnknownMarker, "ctm.prev_txid not on chain");
        const MarkerState& prev = it->second;
        if (prev.voided || prev.next || prev.holder != p.ctm.seller)
            fail(ErrorKind::NotCurrentHolder, "seller is not the current holder of this marker");
        if (tx.sender != p.ctm.seller)
            fail(ErrorKind::BadSignature, "transfer must be sent by the seller");
        auto dit = digest_index_.find(p.new_digest);
        if (dit != digest_index_.end() && !markers_.at(dit->second).voided)
            fail(ErrorKind::DuplicateDigest, "updated digest already on chain");
        const EscrowContract* c = find_escrow(p.ctm);
        if (!c || c->state != EscrowState::Funded)
            fail(ErrorKind::WrongContractState, "no funded escrow for this transfer");
    }

    void validate(const Transaction& tx, const ContractDeployPayload& p) const {
        if (tx.sender != p.seller && tx.sender != p.buyer)
            fail(ErrorKind::BadSignature, "contract must be deployed by a party to it");
        if (p.price == 0) fail(ErrorKind::InsufficientFunds, "price must be positive");
        if (!markers_.count(p.marker)) fail(ErrorKind::UnknownMarker, "contract marker not on chain");
    }

    void validate(const Transaction& tx, const ContractFundPayload& p) const {
        const EscrowContract& c = contract(p.contract_id);
        if (c.state != EscrowState::Deployed)
            fail(ErrorKind::WrongContractState, "contract not awaiting funding");
        if (tx.sender != c.buyer) fail(ErrorKind::BadSignature, "only the buyer funds the escrow");
        if (p.amount != c.price)
            fail(ErrorKind::InsufficientFunds, "funding amount must equal the price");
        if (balance(c.buyer) < p.amount)
            fail(ErrorKind::InsufficientFunds, "buyer balance too low");
    }

    void validate(const Transaction& tx, const ContractConfirmPayload& p) const {
        const EscrowContract& c = contract(p.contract_id);
        if (c.state != EscrowState::Delivered)
            fail(ErrorKind::WrongContractState, "contract not in Delivered state");
        if (tx.sender != c.buyer) fail(ErrorKind::BadSignature, "only the buyer confirms receipt");
    }

    void validate(const Transaction& tx, const ContractRefundPayload& p) const {
        const EscrowContract& c = contract(p.contract_id);
        if (tx.sender != c.buyer && tx.sender != c.seller)
            fail(ErrorKind::BadSignature, "refund must be requested by a party");
        uint64_t deadline = 0;
        switch (c.state) {
            case EscrowState::Deployed: deadline = c.pay_deadline; break;
            case EscrowState::Funded: deadline = c.deliver_deadline; break;
            case EscrowState::Delivered: deadline = c.confirm_deadline; break;
            case EscrowState::Settled:
            case EscrowState::Refunded:
                fail(ErrorKind::WrongContractState, "contract already settled or refunded");
        }
        if (tx.timestamp <= deadline)
            fail(ErrorKind::DeadlineNotReached, "refund deadline not reached");
    }

    // -- application ------------------------------------------------------

    void apply(const Transaction& tx, const DeviceRegisterPayload& p) {
        RegistryEntry e;
        e.id = p.id;
        e.pk = p.pk;
        e.addr = address_of(p.pk);
        registry_[p.id] = e;
        addr_index_[e.addr] = p.id;
        (void)tx;
    }

    void apply(const Transaction& tx, const CopyrightRegisterPayload& p) {
        MarkerState m;
        m.self = tx.txid;
        m.digest = p.digest;
        m.holder = p.holder;
        markers_[tx.txid] = m;
        digest_index_[p.digest] = tx.txid;
    }

    void apply(const Transaction& tx, const CopyrightUpdatePayload& p) {
        MarkerState m;
        m.self = tx.txid;
        m.digest = p.new_digest;
        m.holder = p.ctm.buyer;
        m.prev = p.ctm.prev_txid;
        markers_[tx.txid] = m;
        markers_.at(p.ctm.prev_txid).next = tx.txid;
        digest_index_[p.new_digest] = tx.txid;
        EscrowContract* c = find_escrow_mut(p.ctm);
        c->state = EscrowState::Delivered;
        c->transfer_txid = tx.txid;
    }

    void apply(const Transaction& tx, const ContractDeployPayload& p) {
        EscrowContract c;
        c.contract_id = tx.txid;
        c.seller = p.seller;
        c.buyer = p.buyer;
        c.price = p.price;
        c.marker = p.marker;
        c.deliver_deadline = p.deliver_deadline;
        c.pay_deadline = p.pay_deadline;
        c.confirm_deadline = p.confirm_deadline;
        contracts_[tx.txid] = c;
    }

    void apply(const Transaction& tx, const ContractFundPayload& p) {
        EscrowContract& c = contracts_.at(p.contract_id);
        balances_[c.buyer] -= p.amount;
        c.balance += p.amount;
        c.state = EscrowState::Funded;
        (void)tx;
    }

    void apply(const Transaction& tx, const ContractConfirmPayload& p) {
        EscrowContract& c = contracts_.at(p.contract_id);
        balances_[c.seller] += c.balance;
        c.balance = 0;
        c.state = EscrowState::Settled;
        (void)tx;
    }

    void apply(const Transaction& tx, const ContractRefundPayload& p) {
        EscrowContract& c = contracts_.at(p.contract_id);
        if (c.state == EscrowState::Delivered && c.transfer_txid) {
            // The sale fell through after TX_u: void the transfer so
            // holdership reverts to the seller and the marker can be resold.
            MarkerState& voided = markers_.at(*c.transfer_txid);
            voided.voided = true;
            if (voided.prev) markers_.at(*voided.prev).next.reset();
            auto dit = digest_index_.find(voided.digest);
            if (dit != digest_index_.end() && dit->second == *c.transfer_txid)
                digest_index_.erase(dit);
        }
        balances_[c.buyer] += c.balance;
        c.balance = 0;
        c.state = EscrowState::Refunded;
        (void)tx;
    }

    const EscrowContract* find_escrow(const CopyrightTransferMarker& ctm) const {
        const EscrowContract* best = nullptr;
        for (const auto& [id, c] : contracts_) {
            if (c.marker == ctm.prev_txid && c.seller == ctm.seller && c.buyer == ctm.buyer &&
                c.state == EscrowState::Funded) {
                best = &c;
            }
        }
        return best;
    }

    EscrowContract* find_escrow_mut(const CopyrightTransferMarker& ctm) {
        return const_cast<EscrowContract*>(find_escrow(ctm));
    }

    void seal_block(const Transaction& tx) {
        size_t idx = txs_.size();
        txs_.push_back(tx);
        tx_index_[tx.txid] = idx;

        Block b;
        b.height = blocks_.size();
        b.prev_hash = blocks_.empty() ? Hash32{} : blocks_.back().hash;
        b.tick = tick_;
        b.txids.push_back(tx.txid);
        b.hash = b.compute_hash();
        blocks_.push_back(std::move(b));
    }

    const Curve* curve_;
    PubKey ca_pk_{};
    Address ca_addr_{};
    std::vector<std::pair<Address, uint64_t>> genesis_;
    uint64_t total_supply_ = 0;
    uint64_t tick_ = 0;

    std::vector<Transaction> txs_;
    std::vector<Block> blocks_;
    std::map<TxId, size_t> tx_index_;
    std::map<std::string, RegistryEntry> registry_;
    std::map<Address, std::string> addr_index_;
    std::map<Address, uint64_t> balances_;
    std::map<TxId, EscrowContract> contracts_;
    std::map<TxId, MarkerState> markers_;
    std::map<Digest, TxId> digest_index_;
};

}  // namespace datasafe
