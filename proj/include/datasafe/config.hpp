#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "datasafe/errors.hpp"
#include "datasafe/puf.hpp"

namespace datasafe {

/// Tool configuration. Everything that feeds randomness is an explicit seed,
/// so two runs with the same config and inputs produce byte-identical output.
struct Config {
    std::string root = ".";
    std::string ledger_path = "ledger.dsl";
    std::string securedb_path = "securedb.json";
    std::string devices_dir = "devices";
    std::string curve = "secp256k1";
    PufParams puf;
    uint64_t master_seed = 1;

    std::string resolve(const std::string& path) const {
        if (path.empty() || path.front() == '/') return path;
        return root + "/" + path;
    }

    static Config from_json(const nlohmann::json& j) {
        Config c;
        c.ledger_path = j.value("ledger_path", c.ledger_path);
        c.securedb_path = j.value("securedb_path", c.securedb_path);
        c.devices_dir = j.value("devices_dir", c.devices_dir);
        c.curve = j.value("curve", c.curve);
        c.master_seed = j.value("master_seed", c.master_seed);
        if (j.contains("puf")) {
            const auto& p = j.at("puf");
            c.puf.n_puf = p.value("n_puf", c.puf.n_puf);
            c.puf.flip_prob = p.value("flip_prob", c.puf.flip_prob);
            c.puf.repetition = p.value("repetition", c.puf.repetition);
        }
        c.puf.validate();
        return c;
    }

    static Config load(const std::string& root, const std::string& config_path = "") {
        Config c;
        std::string path = config_path;
        if (path.empty()) path = root + "/datasafe.json";
        std::ifstream f(path);
        if (f) {
            std::stringstream ss;
            ss << f.rdbuf();
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(ss.str());
            } catch (const nlohmann::json::exception& e) {
                fail(ErrorKind::ParseError, std::string("config: ") + e.what());
            }
            c = from_json(j);
        }
        c.root = root;
        c.apply_env_overrides();
        c.puf.validate();
        return c;
    }

    void apply_env_overrides() {
        if (const char* v = std::getenv("DATASAFE_LEDGER_PATH")) ledger_path = v;
        if (const char* v = std::getenv("DATASAFE_SECUREDB_PATH")) securedb_path = v;
        if (const char* v = std::getenv("DATASAFE_DEVICES_DIR")) devices_dir = v;
        if (const char* v = std::getenv("DATASAFE_CURVE")) curve = v;
        if (const char* v = std::getenv("DATASAFE_MASTER_SEED")) master_seed = std::stoull(v);
        if (const char* v = std::getenv("DATASAFE_FLIP_PROB")) puf.flip_prob = std::stod(v);
        if (const char* v = std::getenv("DATASAFE_REPETITION")) puf.repetition = std::stoul(v);
    }
};

}  // namespace datasafe
