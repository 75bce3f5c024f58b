#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "datasafe/bmp.hpp"
#include "datasafe/protocol.hpp"

namespace datasafe {

enum class ScenarioKind { Transfer, DuplicateRegister, Resale };

/// Declarative scenario: parties, seeds, terms, fault schedule. The runner
/// builds a fresh world (devices, CA, ledger) deterministically from the
/// master seed, so a scenario file pins an entire execution.
struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Transfer;
    uint64_t master_seed = 1;
    uint32_t image_width = 128;
    uint32_t image_height = 128;
    uint64_t image_seed = 7;
    std::string image_path;  // overrides generated image when set
    uint64_t price = 100;
    uint64_t initial_balance = 1000;
    uint64_t pay_deadline = 10;
    uint64_t deliver_deadline = 20;
    uint64_t confirm_deadline = 30;
    TransferFaults faults;

    static ScenarioSpec parse(const std::string& text) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::ParseError, std::string("scenario: ") + e.what());
        }
        ScenarioSpec s;
        std::string kind = j.value("kind", "transfer");
        if (kind == "transfer") s.kind = ScenarioKind::Transfer;
        else if (kind == "duplicate_register") s.kind = ScenarioKind::DuplicateRegister;
        else if (kind == "resale") s.kind = ScenarioKind::Resale;
        else fail(ErrorKind::ParseError, "scenario: unknown kind " + kind);
        s.master_seed = j.value("master_seed", s.master_seed);
        if (j.contains("image")) {
            const auto& img = j.at("image");
            s.image_path = img.value("path", "");
            s.image_width = img.value("width", s.image_width);
            s.image_height = img.value("height", s.image_height);
            s.image_seed = img.value("seed", s.image_seed);
        }
        s.price = j.value("price", s.price);
        s.initial_balance = j.value("initial_balance", s.initial_balance);
        if (j.contains("deadlines")) {
            const auto& d = j.at("deadlines");
            s.pay_deadline = d.value("pay", s.pay_deadline);
            s.deliver_deadline = d.value("deliver", s.deliver_deadline);
            s.confirm_deadline = d.value("confirm", s.confirm_deadline);
        }
        if (j.contains("faults")) {
            const auto& f = j.at("faults");
            s.faults.tamper_delivery = f.value("tamper_delivery", false);
            s.faults.forge_watermark_key = f.value("forge_watermark_key", false);
        }
        return s;
    }

    static ScenarioSpec load(const std::string& path) {
        std::ifstream f(path);
        if (!f) fail(ErrorKind::IoError, "cannot open scenario " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }
};

inline Image24 generate_test_image(uint32_t width, uint32_t height, uint64_t seed) {
    Image24 img;
    img.width = width;
    img.height = height;
    img.pixels.resize(img.pixel_count() * 3);
    std::mt19937_64 rng(seed);
    for (auto& b : img.pixels) b = static_cast<uint8_t>(rng());
    return img;
}

struct ScenarioResult {
    bool settled = false;
    std::optional<ErrorKind> error;
    std::vector<TraceEntry> trace;
    std::optional<TransferOutcome> transfer;       // last hop
    std::optional<TransferOutcome> first_transfer; // first hop of a resale
    std::vector<std::array<uint8_t, 32>> lk_seeds;
    MessageBus bus;
    std::unique_ptr<Ledger> ledger;
    Address a_addr{}, b_addr{}, c_addr{};
    uint64_t initial_balance = 0;
    TxId register_txid{};
};

inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
    const Curve& curve = Curve::get();
    ScenarioResult result;
    result.initial_balance = spec.initial_balance;

    uint64_t ms = spec.master_seed;
    bool three_parties = spec.kind == ScenarioKind::Resale;

    Device a("A", derive_seed(ms, "identity:A"), derive_seed(ms, "provision:A"), curve);
    Device b("B", derive_seed(ms, "identity:B"), derive_seed(ms, "provision:B"), curve);
    Device c("C", derive_seed(ms, "identity:C"), derive_seed(ms, "provision:C"), curve);
    result.a_addr = a.addr();
    result.b_addr = b.addr();
    result.c_addr = c.addr();

    Manufacturer manufacturer;
    manufacturer.enroll(a, derive_seed(ms, "enroll:A"));
    manufacturer.enroll(b, derive_seed(ms, "enroll:B"));
    if (three_parties) manufacturer.enroll(c, derive_seed(ms, "enroll:C"));

    CertAuthority ca(derive_seed(ms, "ca"), manufacturer.db(), curve);

    std::vector<std::pair<Address, uint64_t>> genesis = {
        {a.addr(), spec.initial_balance}, {b.addr(), spec.initial_balance}};
    if (three_parties) genesis.emplace_back(c.addr(), spec.initial_balance);
    result.ledger = std::make_unique<Ledger>(ca.pk(), genesis, curve);
    Ledger& ledger = *result.ledger;

    register_identity(a, ca, ledger, result.bus, derive_seed(ms, "session:A"));
    register_identity(b, ca, ledger, result.bus, derive_seed(ms, "session:B"));
    if (three_parties) register_identity(c, ca, ledger, result.bus, derive_seed(ms, "session:C"));

    Bytes media;
    if (!spec.image_path.empty()) {
        std::ifstream f(spec.image_path, std::ios::binary);
        if (!f) fail(ErrorKind::IoError, "cannot open image " + spec.image_path);
        media.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
        load_bmp(media);  // validate up front
    } else {
        media = save_bmp(generate_test_image(spec.image_width, spec.image_height, spec.image_seed));
    }

    result.register_txid =
        register_copyright(ledger, a, media, derive_seed(ms, "register-file"));

    if (spec.kind == ScenarioKind::DuplicateRegister) {
        try {
            register_copyright(ledger, a, media, derive_seed(ms, "register-dup"));
            result.error = std::nullopt;  // unexpectedly accepted
        } catch (const Error& e) {
            result.error = e.kind();
        }
        result.trace = ledger.trace(result.register_txid);
        return result;
    }

    if (spec.faults.tamper_delivery) {
        result.bus.set_fault([](BusMessage& m) {
            if (m.label == "deliver-file" && !m.data.empty()) {
                m.data[m.data.size() / 2] ^= 0x01;
            }
        });
    }

    TransferTerms terms{spec.price, spec.pay_deadline, spec.deliver_deadline,
                        spec.confirm_deadline};

    if (spec.kind == ScenarioKind::Transfer) {
        TransferOutcome out = run_transfer(ledger, result.bus, a, b, media, result.register_txid,
                                           terms, derive_seed(ms, "transfer"), spec.faults);
        result.settled = out.final_stage == TransferStage::Settled;
        result.error = out.error;
        result.lk_seeds.push_back(out.lk_seed_x);
        if (result.settled) result.trace = ledger.trace(out.update_txid);
        else result.trace = ledger.trace(result.register_txid);
        result.transfer = std::move(out);
        return result;
    }

    // Resale: A -> B -> C.
    ResaleOutcome out =
        resale_chain(ledger, result.bus, a, b, c, media, result.register_txid, terms,
                     derive_seed(ms, "resale"));
    result.settled = out.second.final_stage == TransferStage::Settled;
    result.error = out.second.error ? out.second.error : out.first.error;
    result.lk_seeds.push_back(out.first.lk_seed_x);
    result.lk_seeds.push_back(out.second.lk_seed_x);
    result.trace = out.trace.empty() ? ledger.trace(result.register_txid) : out.trace;
    result.first_transfer = std::move(out.first);
    result.transfer = std::move(out.second);
    return result;
}

/// Line-delimited structured transcript for assertion tooling.
inline void write_transcript(const MessageBus& bus, std::ostream& os) {
    for (const auto& m : bus.log()) {
        nlohmann::json j;
        j["from"] = m.from;
        j["to"] = m.to;
        j["label"] = m.label;
        j["data_hex"] = to_hex(std::span<const uint8_t>(m.data));
        os << j.dump() << "\n";
    }
}

}  // namespace datasafe
