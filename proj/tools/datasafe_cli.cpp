// datasafe: desk-scale simulation of PUF-backed copyright protection.
//
// Subcommands cover device enrollment/registration, copyright registration,
// end-to-end transfer scenarios, direct watermark access, and ledger
// inspection. All state lives under --root; every run is deterministic given
// the same config and inputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "datasafe/config.hpp"
#include "datasafe/scenario.hpp"

namespace fs = std::filesystem;
using namespace datasafe;

namespace {

bool g_records = false;

int exit_code_for(ErrorKind kind) { return 10 + static_cast<int>(kind); }

void emit_error(const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (g_records) {
        nlohmann::json j;
        j["event"] = "error";
        j["kind"] = error_kind_name(e.kind());
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
    }
}

void emit_record(const nlohmann::json& j) {
    if (g_records) std::cerr << j.dump() << "\n";
}

Bytes read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::IoError, "cannot open " + path);
    return Bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const Bytes& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::IoError, "cannot open " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) fail(ErrorKind::IoError, "write failed: " + path);
}

// -- persistent world helpers ------------------------------------------------

SecureDb load_securedb(const Config& cfg) {
    SecureDb db;
    std::string path = cfg.resolve(cfg.securedb_path);
    std::ifstream f(path);
    if (!f) return db;
    nlohmann::json j;
    f >> j;
    for (auto it = j.begin(); it != j.end(); ++it) {
        db.add(it.key(), array_from_hex<32>(it.value().at("c").get<std::string>()),
               array_from_hex<32>(it.value().at("r").get<std::string>()));
    }
    return db;
}

void save_securedb_entry(const Config& cfg, const std::string& id, const Hash32& c,
                         const Hash32& r) {
    std::string path = cfg.resolve(cfg.securedb_path);
    nlohmann::json j = nlohmann::json::object();
    {
        std::ifstream f(path);
        if (f) f >> j;
    }
    j[id] = {{"c", to_hex(c)}, {"r", to_hex(r)}};
    std::ofstream f(path, std::ios::trunc);
    if (!f) fail(ErrorKind::IoError, "cannot open " + path);
    f << j.dump(2) << "\n";
}

Device make_device(const Config& cfg, const std::string& id, const Curve& curve) {
    return Device(id, derive_seed(cfg.master_seed, "identity:" + id),
                  derive_seed(cfg.master_seed, "provision:" + id), curve, cfg.puf);
}

CertAuthority make_ca(const Config& cfg, const SecureDb& db, const Curve& curve) {
    return CertAuthority(derive_seed(cfg.master_seed, "ca"), db, curve);
}

Ledger open_ledger(const Config& cfg, const Curve& curve, const PubKey& ca_pk) {
    std::string path = cfg.resolve(cfg.ledger_path);
    if (fs::exists(path)) return Ledger::load(path, curve);
    return Ledger(ca_pk, {}, curve);
}

Hash32 parse_hash32(const std::string& hex) { return array_from_hex<32>(hex); }

// -- subcommand bodies -------------------------------------------------------

int cmd_device_enroll(const Config& cfg, const std::string& id) {
    const Curve& curve = Curve::get(cfg.curve);
    SecureDb existing = load_securedb(cfg);
    if (existing.contains(id)) fail(ErrorKind::AlreadyRegistered, "device already enrolled: " + id);

    Device device = make_device(cfg, id, curve);
    Manufacturer manufacturer;
    auto entry = manufacturer.enroll(device, derive_seed(cfg.master_seed, "enroll:" + id));
    save_securedb_entry(cfg, id, entry.challenge, entry.response);

    fs::create_directories(cfg.resolve(cfg.devices_dir));
    std::string dev_path = cfg.resolve(cfg.devices_dir) + "/" + id + ".dspf";
    write_file(dev_path, device.record().serialize());

    std::cout << "enrolled device " << id << " addr " << to_hex(device.addr()) << "\n";
    emit_record({{"event", "device-enrolled"}, {"id", id}, {"addr", to_hex(device.addr())}});
    return 0;
}

int cmd_device_register(const Config& cfg, const std::string& id) {
    const Curve& curve = Curve::get(cfg.curve);
    SecureDb db = load_securedb(cfg);
    if (!db.contains(id)) fail(ErrorKind::UnknownId, "device not enrolled: " + id);
    std::string dev_path = cfg.resolve(cfg.devices_dir) + "/" + id + ".dspf";
    DeviceRecord::parse(read_file(dev_path));  // validate the state file

    Device device = make_device(cfg, id, curve);
    CertAuthority ca = make_ca(cfg, db, curve);
    Ledger ledger = open_ledger(cfg, curve, ca.pk());
    MessageBus bus;
    RegistryEntry entry =
        register_identity(device, ca, ledger, bus, derive_seed(cfg.master_seed, "session:" + id));
    ledger.save(cfg.resolve(cfg.ledger_path));

    std::cout << "registered device " << id << " addr " << to_hex(entry.addr) << "\n";
    emit_record({{"event", "device-registered"}, {"id", id}, {"addr", to_hex(entry.addr)}});
    return 0;
}

int cmd_file_register(const Config& cfg, const std::string& bmp_path, const std::string& id) {
    const Curve& curve = Curve::get(cfg.curve);
    SecureDb db = load_securedb(cfg);
    Device device = make_device(cfg, id, curve);
    CertAuthority ca = make_ca(cfg, db, curve);
    Ledger ledger = open_ledger(cfg, curve, ca.pk());

    Bytes media = read_file(bmp_path);
    load_bmp(media);  // must be a valid 24-bit BMP
    TxId txid = register_copyright(ledger, device, media,
                                   derive_seed(cfg.master_seed, "file-register:" + id));
    ledger.save(cfg.resolve(cfg.ledger_path));

    std::cout << "registered " << bmp_path << " txid " << to_hex(txid) << "\n";
    emit_record({{"event", "file-registered"}, {"txid", to_hex(txid)},
                 {"digest", to_hex(sha256(media))}});
    return 0;
}

int cmd_transfer_run(const Config& cfg, const std::string& scenario_path,
                     const std::string& transcript_path) {
    ScenarioSpec spec = ScenarioSpec::load(scenario_path);
    ScenarioResult result = run_scenario(spec);
    result.ledger->save(cfg.resolve(cfg.ledger_path));

    if (!transcript_path.empty()) {
        std::ofstream f(transcript_path, std::ios::trunc);
        if (!f) fail(ErrorKind::IoError, "cannot open " + transcript_path);
        write_transcript(result.bus, f);
    }

    nlohmann::json j;
    j["event"] = "scenario";
    j["settled"] = result.settled;
    if (result.error) j["error"] = error_kind_name(*result.error);
    nlohmann::json chain = nlohmann::json::array();
    for (const auto& e : result.trace) chain.push_back(to_hex(e.holder));
    j["trace"] = chain;
    emit_record(j);

    if (spec.kind == ScenarioKind::DuplicateRegister) {
        // Success for this scenario kind is the rejection itself.
        if (result.error) {
            std::cout << "duplicate registration rejected: " << error_kind_name(*result.error)
                      << "\n";
            return exit_code_for(*result.error);
        }
        std::cout << "duplicate registration unexpectedly accepted\n";
        return 1;
    }

    for (const auto& e : result.trace)
        std::cout << "holder " << to_hex(e.holder) << " txid " << to_hex(e.txid) << "\n";
    if (result.settled) {
        std::cout << "settled\n";
        return 0;
    }
    std::cout << "aborted";
    if (result.error) std::cout << " (" << error_kind_name(*result.error) << ")";
    std::cout << "\n";
    return result.error ? exit_code_for(*result.error) : 1;
}

int cmd_wm_embed(const Config& cfg, const std::string& in_path, const std::string& out_path,
                 const std::string& lk_path, const std::string& wm_hex, uint32_t random_bits,
                 uint64_t seed) {
    Image24 img = load_bmp(read_file(in_path));
    Watermark wm;
    if (!wm_hex.empty()) {
        Bytes packed = from_hex(wm_hex);
        wm = unpack_bits(packed, packed.size() * 8);
    } else {
        HashStream s(seed_bytes(derive_seed(seed, "wm-bits")));
        wm.resize(random_bits);
        for (auto& b : wm) b = s.next_bit();
    }
    EmbedResult result = embed(img, wm, derive_seed32(seed, "wm-seed-x"),
                               derive_seed(seed, "wm-fill"));
    write_file(out_path, save_bmp(result.covered));
    write_file(lk_path, result.key.serialize());
    std::cout << "embedded " << wm.size() << " bits; psnr "
              << psnr(img, result.covered) << " dB\n";
    emit_record({{"event", "embedded"}, {"bits", wm.size()}, {"psnr", psnr(img, result.covered)}});
    return 0;
}

int cmd_wm_extract(const std::string& in_path, const std::string& lk_path) {
    Image24 img = load_bmp(read_file(in_path));
    LocationKey lk = LocationKey::parse(read_file(lk_path));
    Watermark wm = extract(img, lk);
    std::cout << to_hex(pack_bits(wm)) << "\n";
    emit_record({{"event", "extracted"}, {"bits", wm.size()}});
    return 0;
}

int cmd_wm_psnr(const std::string& a_path, const std::string& b_path) {
    Image24 a = load_bmp(read_file(a_path));
    Image24 b = load_bmp(read_file(b_path));
    double value = psnr(a, b);
    if (std::isinf(value)) std::cout << "inf\n";
    else std::cout << value << " dB\n";
    emit_record({{"event", "psnr"}, {"db", std::isinf(value) ? -1.0 : value}});
    return 0;
}

int cmd_ledger_verify(const Config& cfg) {
    std::string path = cfg.resolve(cfg.ledger_path);
    Ledger ledger = Ledger::load(path);  // throws on any corruption
    if (!ledger.audit_chain() || !ledger.audit_balances())
        fail(ErrorKind::ParseError, "ledger audit failed");
    std::cout << "ok: " << ledger.blocks().size() << " blocks, "
              << ledger.transactions().size() << " transactions\n";
    emit_record({{"event", "ledger-verified"}, {"blocks", ledger.blocks().size()}});
    return 0;
}

const char* tx_kind_name(TxKind k) {
    switch (k) {
        case TxKind::DeviceRegister: return "device-register";
        case TxKind::CopyrightRegister: return "copyright-register";
        case TxKind::CopyrightUpdate: return "copyright-update";
        case TxKind::ContractDeploy: return "contract-deploy";
        case TxKind::ContractFund: return "contract-fund";
        case TxKind::ContractConfirm: return "contract-confirm";
        case TxKind::ContractRefund: return "contract-refund";
    }
    return "?";
}

int cmd_ledger_dump(const Config& cfg) {
    Ledger ledger = Ledger::load(cfg.resolve(cfg.ledger_path));
    for (const auto& block : ledger.blocks()) {
        for (const auto& txid : block.txids) {
            const Transaction& tx = ledger.get(txid);
            std::cout << "block " << block.height << " tick " << block.tick << " "
                      << tx_kind_name(tx.kind) << " txid " << to_hex(txid) << " sender "
                      << to_hex(tx.sender) << "\n";
        }
    }
    return 0;
}

int cmd_ledger_trace(const Config& cfg, const std::string& key_hex) {
    Ledger ledger = Ledger::load(cfg.resolve(cfg.ledger_path));
    Hash32 key = parse_hash32(key_hex);
    std::vector<TraceEntry> chain;
    if (ledger.has_tx(key)) chain = ledger.trace(key);
    else chain = ledger.trace_digest(key);
    for (const auto& e : chain)
        std::cout << to_hex(e.holder) << " " << to_hex(e.txid) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DataSafe copyright-protection simulator"};
    app.require_subcommand(1);

    std::string root = ".";
    std::string config_path;
    app.add_option("--root", root, "root directory for all state files");
    app.add_option("--config", config_path, "config file (default <root>/datasafe.json)");
    app.add_flag("--records", g_records, "emit machine-readable records on stderr");

    std::string id, bmp_path, scenario_path, transcript_path;
    std::string in_path, out_path, lk_path, wm_hex, key_hex;
    uint32_t random_bits = 512;
    uint64_t wm_seed = 1;

    auto* device = app.add_subcommand("device", "device lifecycle");
    auto* dev_enroll = device->add_subcommand("enroll", "manufacture-time enrollment");
    dev_enroll->add_option("--id", id, "device id")->required();
    auto* dev_register = device->add_subcommand("register", "register identity with the CA");
    dev_register->add_option("--id", id, "device id")->required();

    auto* file = app.add_subcommand("file", "copyright files");
    auto* file_register = file->add_subcommand("register", "register a BMP on the ledger");
    file_register->add_option("bmp", bmp_path, "24-bit BMP file")->required();
    file_register->add_option("--device", id, "holding device id")->required();

    auto* transfer = app.add_subcommand("transfer", "transfer sessions");
    auto* transfer_run = transfer->add_subcommand("run", "execute a scenario file");
    transfer_run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    transfer_run->add_option("--transcript", transcript_path, "write transcript log here");

    auto* wm = app.add_subcommand("wm", "watermark operations");
    auto* wm_embed = wm->add_subcommand("embed", "embed a watermark");
    wm_embed->add_option("input", in_path)->required();
    wm_embed->add_option("output", out_path)->required();
    wm_embed->add_option("--lk-out", lk_path, "location key output file")->required();
    wm_embed->add_option("--watermark-hex", wm_hex, "explicit watermark bits as hex");
    wm_embed->add_option("--random-bits", random_bits, "random watermark length (default 512)");
    wm_embed->add_option("--seed", wm_seed, "embedding seed");
    auto* wm_extract = wm->add_subcommand("extract", "extract a watermark");
    wm_extract->add_option("input", in_path)->required();
    wm_extract->add_option("--lk", lk_path, "location key file")->required();
    auto* wm_psnr = wm->add_subcommand("psnr", "peak signal-to-noise ratio");
    wm_psnr->add_option("original", in_path)->required();
    wm_psnr->add_option("covered", out_path)->required();

    auto* ledger = app.add_subcommand("ledger", "ledger inspection");
    auto* ledger_verify = ledger->add_subcommand("verify", "integrity check");
    auto* ledger_dump = ledger->add_subcommand("dump", "print all transactions");
    auto* ledger_trace = ledger->add_subcommand("trace", "trace a copyright chain");
    ledger_trace->add_option("key", key_hex, "txid or file digest (hex)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = Config::load(root, config_path);
        if (dev_enroll->parsed()) return cmd_device_enroll(cfg, id);
        if (dev_register->parsed()) return cmd_device_register(cfg, id);
        if (file_register->parsed()) return cmd_file_register(cfg, bmp_path, id);
        if (transfer_run->parsed()) return cmd_transfer_run(cfg, scenario_path, transcript_path);
        if (wm_embed->parsed())
            return cmd_wm_embed(cfg, in_path, out_path, lk_path, wm_hex, random_bits, wm_seed);
        if (wm_extract->parsed()) return cmd_wm_extract(in_path, lk_path);
        if (wm_psnr->parsed()) return cmd_wm_psnr(in_path, out_path);
        if (ledger_verify->parsed()) return cmd_ledger_verify(cfg);
        if (ledger_dump->parsed()) return cmd_ledger_dump(cfg);
        if (ledger_trace->parsed()) return cmd_ledger_trace(cfg, key_hex);
    } catch (const Error& e) {
        emit_error(e);
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
