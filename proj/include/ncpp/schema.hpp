#pragma once
// Declarative description of PerfCastDB columns, their groups, and suite
// label layouts. Immutable after load.

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/errors.hpp"

namespace ncpp {

enum class FeatureKind { Numeric, Categorical };
enum class FeatureGroup { Memory, Workload, Cpu, Other };

inline std::string to_string(FeatureKind k) {
    return k == FeatureKind::Numeric ? "numeric" : "categorical";
}

inline std::string to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::Memory: return "Memory";
        case FeatureGroup::Workload: return "Workload";
        case FeatureGroup::Cpu: return "CPU";
        default: return "Other";
    }
}

inline FeatureKind kind_from_string(const std::string& s) {
    if (s == "numeric") return FeatureKind::Numeric;
    if (s == "categorical") return FeatureKind::Categorical;
    throw DataError("unknown feature kind: " + s);
}

inline FeatureGroup group_from_string(const std::string& s) {
    if (s == "Memory") return FeatureGroup::Memory;
    if (s == "Workload") return FeatureGroup::Workload;
    if (s == "CPU") return FeatureGroup::Cpu;
    if (s == "Other") return FeatureGroup::Other;
    throw DataError("unknown feature group: " + s);
}

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    FeatureGroup group = FeatureGroup::Other;
    std::string unit;
};

struct SuiteSpec {
    std::string name;
    std::vector<std::string> benchmarks; // fixed order, persisted with models

    int output_dim() const { return static_cast<int>(benchmarks.size()); }
};

// The model's four attention groups. All categorical features route to Char
// regardless of their semantic group; numeric features keep their semantic
// group (Memory/CPU/Other).
struct GroupPartition {
    std::vector<int> memory;
    std::vector<int> cpu;
    std::vector<int> other;
    std::vector<int> chars;

    std::vector<const std::vector<int>*> all() const { return {&memory, &cpu, &other, &chars}; }
    static std::vector<std::string> names() { return {"memory", "cpu", "other", "char"}; }
};

class FeatureSchema {
public:
    std::vector<FeatureSpec> features;

    void validate() const {
        std::set<std::string> seen;
        for (const auto& f : features) {
            if (f.name.empty()) throw DataError("schema: empty feature name");
            if (!seen.insert(f.name).second) throw DataError("schema: duplicate feature name: " + f.name);
        }
    }

    int size() const { return static_cast<int>(features.size()); }

    int count(FeatureGroup g) const {
        int n = 0;
        for (const auto& f : features)
            if (f.group == g) ++n;
        return n;
    }

    int count(FeatureKind k) const {
        int n = 0;
        for (const auto& f : features)
            if (f.kind == k) ++n;
        return n;
    }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& f : features) out.push_back(f.name);
        return out;
    }
};

inline GroupPartition group_partition(const FeatureSchema& schema) {
    GroupPartition p;
    for (int i = 0; i < schema.size(); ++i) {
        const auto& f = schema.features[static_cast<size_t>(i)];
        if (f.kind == FeatureKind::Categorical) {
            p.chars.push_back(i);
        } else if (f.group == FeatureGroup::Memory) {
            p.memory.push_back(i);
        } else if (f.group == FeatureGroup::Cpu) {
            p.cpu.push_back(i);
        } else {
            p.other.push_back(i);
        }
    }
    return p;
}

// ---- built-in defaults -----------------------------------------------------

// The six suites and their benchmark layouts.
inline std::vector<SuiteSpec> default_suites() {
    std::vector<SuiteSpec> suites;
    suites.push_back({"SPECrate2017_int_base",
                      {"500.perlbench_r", "502.gcc_r", "505.mcf_r", "520.omnetpp_r",
                       "523.xalancbmk_r", "525.x264_r", "531.deepsjeng_r", "541.leela_r",
                       "548.exchange2_r", "557.xz_r", "999.specrand_ir"}});
    suites.push_back({"SPECrate2017_fp_base",
                      {"503.bwaves_r", "507.cactuBSSN_r", "508.namd_r", "510.parest_r",
                       "511.povray_r", "519.lbm_r", "521.wrf_r", "526.blender_r",
                       "527.cam4_r", "538.imagick_r", "544.nab_r", "549.fotonik3d_r",
                       "554.roms_r", "997.specrand_fr"}});
    suites.push_back({"MLC_Latency",
                      {"local_l1", "local_l2", "local_l3", "local_dram", "remote_dram",
                       "l3_hitm_local", "l3_hitm_remote", "random_local", "random_remote"}});
    suites.push_back({"MLC_Bandwidth",
                      {"all_reads", "rw_3_1", "rw_2_1", "rw_1_1", "stream_triad_like",
                       "l3_max", "local_socket", "remote_socket", "peak_injection"}});
    suites.push_back({"Stream", {"Copy", "Scale", "Sum", "Triad"}});
    suites.push_back({"HPCG", {"HPCG"}});
    return suites;
}

inline SuiteSpec find_suite(const std::string& name) {
    for (auto& s : default_suites())
        if (s.name == name) return s;
    throw DataError("unknown suite: " + name);
}

// Default 35-feature schema: 7 Memory numeric, 20 CPU numeric, 2 Other
// numeric, and 6 categorical (the character group). The full CPU list and
// the sixth categorical feature are placeholders matching the published
// group counts; adjust via a schema file if your data differs.
inline FeatureSchema default_schema() {
    FeatureSchema s;
    auto num = [&](const std::string& n, FeatureGroup g, const std::string& u = "") {
        s.features.push_back({n, FeatureKind::Numeric, g, u});
    };
    auto cat = [&](const std::string& n, FeatureGroup g) {
        s.features.push_back({n, FeatureKind::Categorical, g, ""});
    };
    // Memory group (7)
    num("DIMM_rank", FeatureGroup::Memory);
    num("Density", FeatureGroup::Memory, "GB");
    num("DIMM_Num", FeatureGroup::Memory);
    num("DIMM_Total", FeatureGroup::Memory, "GB");
    num("DIMM_Freq", FeatureGroup::Memory, "MT/s");
    num("Organization", FeatureGroup::Memory);
    num("CL", FeatureGroup::Memory, "cycles");
    // CPU group (20)
    num("CPU_Base_Freq", FeatureGroup::Cpu, "GHz");
    num("CPU_Max_Freq", FeatureGroup::Cpu, "GHz");
    num("AVX2_P1Freq", FeatureGroup::Cpu, "GHz");
    num("AVX3_P1Freq", FeatureGroup::Cpu, "GHz");
    num("AVX3_TurboFreq", FeatureGroup::Cpu, "GHz");
    num("TMUL_P1Freq", FeatureGroup::Cpu, "GHz");
    num("TMUL_TurboFreq", FeatureGroup::Cpu, "GHz");
    num("Core_per_Socket", FeatureGroup::Cpu);
    num("Socket_Num", FeatureGroup::Cpu);
    num("Thread_per_Core", FeatureGroup::Cpu);
    num("CPU_Total", FeatureGroup::Cpu);
    num("L1D_Cache", FeatureGroup::Cpu, "KB");
    num("L1I_Cache", FeatureGroup::Cpu, "KB");
    num("L2_Cache", FeatureGroup::Cpu, "MB");
    num("L3_Cache", FeatureGroup::Cpu, "MB");
    num("Uncore_Freq", FeatureGroup::Cpu, "GHz");
    num("Mesh_Freq", FeatureGroup::Cpu, "GHz");
    num("NUMA_Nodes", FeatureGroup::Cpu);
    num("Channels_per_Socket", FeatureGroup::Cpu);
    num("Memory_Speed_Supported", FeatureGroup::Cpu, "MT/s");
    // Other group (2 numeric)
    num("TDP", FeatureGroup::Other, "W");
    num("Power_freq", FeatureGroup::Other, "GHz");
    // Categorical features (6) -> Char group in the model
    cat("Preset", FeatureGroup::Workload);
    cat("Microcode", FeatureGroup::Other);
    cat("CPU_Stepping", FeatureGroup::Other);
    cat("CPU_Family", FeatureGroup::Other);
    cat("OS", FeatureGroup::Other);
    cat("Benchmark_Tool", FeatureGroup::Workload);
    s.validate();
    return s;
}

// ---- JSON persistence ------------------------------------------------------

inline nlohmann::json schema_to_json(const FeatureSchema& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : s.features) {
        nlohmann::json j = {{"name", f.name}, {"kind", to_string(f.kind)}, {"group", to_string(f.group)}};
        if (!f.unit.empty()) j["unit"] = f.unit;
        arr.push_back(j);
    }
    return arr;
}

inline FeatureSchema schema_from_json(const nlohmann::json& arr) {
    if (!arr.is_array()) throw DataError("schema json: expected an array of feature specs");
    FeatureSchema s;
    for (const auto& j : arr) {
        FeatureSpec f;
        f.name = j.at("name").get<std::string>();
        f.kind = kind_from_string(j.at("kind").get<std::string>());
        f.group = group_from_string(j.at("group").get<std::string>());
        if (j.contains("unit")) f.unit = j["unit"].get<std::string>();
        s.features.push_back(std::move(f));
    }
    s.validate();
    return s;
}

inline FeatureSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schema file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("schema parse error in " + path + ": " + e.what());
    }
    return schema_from_json(j);
}

inline void save_schema(const FeatureSchema& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write schema file: " + path);
    out << schema_to_json(s).dump(2) << "\n";
}

} // namespace ncpp
