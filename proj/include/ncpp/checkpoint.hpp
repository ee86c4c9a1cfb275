#pragma once
// Parameter checkpoints: a JSON manifest header followed by concatenated
// little-endian float64 buffers, one flat entry per parameter path.
// Batch-norm running statistics are stored alongside the weights.

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/errors.hpp"
#include "ncpp/model.hpp"

namespace ncpp {

constexpr char kCheckpointMagic[] = "NCPPCKPT";
constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(NCPPParams& params, const std::string& path) {
    struct Entry {
        std::string name;
        const std::vector<double>* data;
        Shape shape;
    };
    std::vector<Entry> entries;
    params.visit([&](const std::string& n, const TensorPtr& t) {
        entries.push_back({n, &t->data, t->shape});
    });
    params.visit_state([&](const std::string& n, std::vector<double>& v) {
        entries.push_back({n, &v, {static_cast<int>(v.size())}});
    });

    nlohmann::json manifest;
    manifest["version"] = kCheckpointVersion;
    int64_t offset = 0;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : entries) {
        tensors.push_back({{"path", e.name},
                           {"shape", e.shape},
                           {"offset", offset},
                           {"count", e.data->size()}});
        offset += static_cast<int64_t>(e.data->size());
    }
    manifest["tensors"] = tensors;
    const std::string mjson = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const uint64_t mlen = mjson.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mjson.data(), static_cast<std::streamsize>(mjson.size()));
    for (const auto& e : entries)
        out.write(reinterpret_cast<const char*>(e.data->data()),
                  static_cast<std::streamsize>(e.data->size() * sizeof(double)));
    if (!out) throw IoError("write failure on checkpoint: " + path);
}

// Loads into an already-initialized parameter set; shapes must match.
inline void load_checkpoint(NCPPParams& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw DataError(path + " is not an NCPP checkpoint");
    uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string mjson(mlen, '\0');
    in.read(mjson.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw DataError(path + ": truncated manifest");
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mjson);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": bad manifest: " + e.what());
    }
    if (manifest.at("version").get<int>() != kCheckpointVersion)
        throw DataError(path + ": unsupported checkpoint version");

    std::map<std::string, std::pair<int64_t, int64_t>> index; // path -> offset,count
    for (const auto& t : manifest.at("tensors"))
        index[t.at("path").get<std::string>()] = {t.at("offset").get<int64_t>(),
                                                  t.at("count").get<int64_t>()};

    const std::streampos data_start = in.tellg();
    auto read_into = [&](const std::string& name, std::vector<double>& dst) {
        auto it = index.find(name);
        if (it == index.end()) throw DataError(path + ": checkpoint missing tensor " + name);
        if (static_cast<int64_t>(dst.size()) != it->second.second)
            throw ShapeError(path + ": size mismatch for " + name);
        in.seekg(data_start + static_cast<std::streamoff>(it->second.first * sizeof(double)));
        in.read(reinterpret_cast<char*>(dst.data()),
                static_cast<std::streamsize>(dst.size() * sizeof(double)));
        if (!in) throw DataError(path + ": truncated data for " + name);
    };
    params.visit([&](const std::string& n, const TensorPtr& t) {
        read_into(n, const_cast<Tensor&>(*t).data);
    });
    params.visit_state([&](const std::string& n, std::vector<double>& v) { read_into(n, v); });
}

// ---- model bundle (checkpoint + JSON sidecar) ------------------------------

inline nlohmann::json config_to_json(const NCPPConfig& c) {
    return {{"heads", c.heads},
            {"layers", c.layers},
            {"d_model", c.d_model},
            {"embed_dim", c.embed_dim},
            {"ffn_mult", c.ffn_mult},
            {"vocab_size", c.vocab_size},
            {"output_dim", c.output_dim},
            {"huber_delta", c.huber_delta},
            {"seed", c.seed},
            {"intra_memory", c.intra_memory},
            {"intra_cpu", c.intra_cpu},
            {"intra_other", c.intra_other},
            {"intra_char", c.intra_char},
            {"inter_enabled", c.inter_enabled},
            {"inter_pooled", c.inter_pooled}};
}

inline NCPPConfig config_from_json(const nlohmann::json& j) {
    NCPPConfig c;
    c.heads = j.value("heads", c.heads);
    c.layers = j.value("layers", c.layers);
    c.d_model = j.value("d_model", c.d_model);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.ffn_mult = j.value("ffn_mult", c.ffn_mult);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.output_dim = j.value("output_dim", c.output_dim);
    c.huber_delta = j.value("huber_delta", c.huber_delta);
    c.seed = j.value("seed", c.seed);
    c.intra_memory = j.value("intra_memory", c.intra_memory);
    c.intra_cpu = j.value("intra_cpu", c.intra_cpu);
    c.intra_other = j.value("intra_other", c.intra_other);
    c.intra_char = j.value("intra_char", c.intra_char);
    c.inter_enabled = j.value("inter_enabled", c.inter_enabled);
    c.inter_pooled = j.value("inter_pooled", c.inter_pooled);
    c.validate();
    return c;
}

// Saves the checkpoint plus a <path>.json sidecar holding everything needed
// to reload and run inference: config, suite, and fitted transforms.
inline void save_model_bundle(NCPPParams& params, const Transforms& tf, const SuiteSpec& suite,
                              const std::string& path) {
    save_checkpoint(params, path);
    nlohmann::json side;
    side["version"] = kCheckpointVersion;
    side["config"] = config_to_json(params.config);
    side["suite"] = {{"name", suite.name}, {"benchmarks", suite.benchmarks}};
    side["transforms"] = transforms_to_json(tf);
    std::ofstream out(path + ".json");
    if (!out) throw IoError("cannot write sidecar: " + path + ".json");
    out << side.dump(2) << "\n";
}

struct ModelBundle {
    NCPPParams params;
    Transforms transforms;
    SuiteSpec suite;
};

inline ModelBundle load_model_bundle(const std::string& path) {
    std::ifstream in(path + ".json");
    if (!in) throw IoError("cannot open sidecar: " + path + ".json");
    nlohmann::json side;
    try {
        in >> side;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ".json: " + e.what());
    }
    ModelBundle b;
    b.transforms = transforms_from_json(side.at("transforms"));
    b.suite.name = side.at("suite").at("name").get<std::string>();
    b.suite.benchmarks = side.at("suite").at("benchmarks").get<std::vector<std::string>>();
    NCPPConfig cfg = config_from_json(side.at("config"));
    b.params = init_model(cfg, b.transforms.schema);
    load_checkpoint(b.params, path);
    return b;
}

} // namespace ncpp
