#pragma once
// Per-run provenance record: command, hashed inputs, seed, artifacts, timing.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/baselines.hpp" // fnv1a64
#include "ncpp/errors.hpp"

namespace ncpp {

constexpr const char* kNcppVersion = "0.1.0";

inline uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

struct RunManifest {
    std::string command;
    std::string config_path;        // empty if no config file was given
    uint64_t config_hash = 0;
    std::vector<std::pair<std::string, uint64_t>> inputs; // path, content hash
    uint64_t seed = 0;
    std::vector<std::string> artifacts;
    double wall_time_s = 0.0;
    std::string version = kNcppVersion;
    nlohmann::json effective_config; // flags > config file > defaults

    void add_input(const std::string& path) { inputs.emplace_back(path, hash_file(path)); }
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["wall_time_s"] = m.wall_time_s;
    if (!m.config_path.empty()) {
        j["config_path"] = m.config_path;
        j["config_hash"] = m.config_hash;
    }
    j["inputs"] = nlohmann::json::array();
    for (const auto& [p, h] : m.inputs) j["inputs"].push_back({{"path", p}, {"hash", h}});
    j["artifacts"] = m.artifacts;
    if (!m.effective_config.is_null()) j["effective_config"] = m.effective_config;
    return j;
}

inline std::string write_manifest(const RunManifest& m, const std::string& out_dir) {
    const std::string path = out_dir + "/" + m.command + "_manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << manifest_to_json(m).dump(2) << "\n";
    return path;
}

// Every artifact listed must exist (and hence be hashable).
inline void verify_manifest_artifacts(const RunManifest& m) {
    for (const auto& a : m.artifacts) hash_file(a);
}

} // namespace ncpp
