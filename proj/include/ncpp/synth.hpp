#pragma once
// Deterministic synthetic dataset generator with planted label functions.
// Feature ranges below are invented, vaguely server-like numbers used only to
// exercise the pipeline; they do not describe any real hardware population.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/baselines.hpp"
#include "ncpp/csv.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/ingest.hpp"
#include "ncpp/schema.hpp"

namespace ncpp {

enum class SynthFamily { Linear, NonlinearInteraction };

inline std::string to_string(SynthFamily f) {
    return f == SynthFamily::Linear ? "linear" : "nonlinear-interaction";
}

inline SynthFamily family_from_string(const std::string& s) {
    if (s == "linear") return SynthFamily::Linear;
    if (s == "nonlinear-interaction") return SynthFamily::NonlinearInteraction;
    throw DataError("unknown synth family: " + s);
}

struct SynthConfig {
    int n_records = 256;
    std::string suite = "SPECrate2017_fp_base";
    double noise_sigma = 0.0;        // Gaussian on log scale; 0 = noiseless
    SynthFamily family = SynthFamily::Linear;
    uint64_t seed = 42;
    double target_linear_mape = 0.16; // nonlinear family: calibrate until a
                                      // plain least-squares fit is at least
                                      // this far off (fraction, not percent)

    void validate() const {
        if (n_records < 2) throw DataError("synth: n_records must be >= 2");
        if (noise_sigma < 0) throw DataError("synth: noise sigma must be >= 0");
        if (target_linear_mape <= 0) throw DataError("synth: target_linear_mape must be > 0");
    }
};

// Exact noiseless label function. Standardization constants are part of the
// handle so labels can be replayed from the persisted feature strings.
struct TruthFunction {
    SynthFamily family = SynthFamily::Linear;
    std::vector<int> numeric_idx;       // schema indices the function reads
    std::vector<double> mean, stdev;    // per numeric_idx entry
    std::vector<int> group_id;          // per numeric_idx entry: 0 mem, 1 cpu, 2 other
    std::vector<double> intercept;      // per output
    std::vector<double> weights;        // [out][p] row-major linear part
    // Nonlinear extras, per output: one pairwise product of group scores and
    // one hinge term on a group score. Group scores are normalized per-group
    // sums of the standardized inputs, so the extras stay linearly
    // inexpressible yet depend on the inputs only through within-group sums.
    std::vector<int> pair_a, pair_b;    // group ids
    std::vector<double> pair_coef;
    std::vector<int> hinge_idx;         // group id
    std::vector<double> hinge_coef, hinge_knee;
    double scale = 0.0; // nonlinear amplitude, set by calibration
};

struct CalibrationReport {
    double scale = 0.0;
    double linear_fit_mape = 0.0; // of an ordinary least-squares fit, in-sample
    int iterations = 0;
};

struct SynthResult {
    Dataset dataset;                 // consolidated records, noise applied
    TruthFunction truth;
    CalibrationReport calibration;   // meaningful for the nonlinear family
    std::vector<std::string> dimm_parts; // per record, for raw CSV export
};

// ---- value pools -----------------------------------------------------------

namespace detail {

struct NumericRange {
    double lo = 1.0, hi = 100.0;
    bool integral = false;
};

inline NumericRange synth_range(const std::string& name) {
    static const std::map<std::string, NumericRange> table = {
        {"DIMM_Num", {8, 16, true}},      {"DIMM_Freq", {3600, 5600, false}},
        {"CPU_Base_Freq", {1.8, 3.6, false}}, {"CPU_Max_Freq", {2.8, 4.2, false}},
        {"AVX2_P1Freq", {1.6, 3.2, false}},   {"AVX3_P1Freq", {1.4, 3.0, false}},
        {"AVX3_TurboFreq", {2.0, 3.6, false}}, {"TMUL_P1Freq", {1.2, 2.8, false}},
        {"TMUL_TurboFreq", {1.8, 3.2, false}}, {"Core_per_Socket", {8, 60, true}},
        {"Socket_Num", {1, 2, true}},     {"Thread_per_Core", {1, 2, true}},
        {"CPU_Total", {16, 240, true}},   {"L1D_Cache", {32, 64, true}},
        {"L1I_Cache", {32, 64, true}},    {"L2_Cache", {1, 4, true}},
        {"L3_Cache", {30, 120, true}},    {"Uncore_Freq", {1.2, 2.6, false}},
        {"Mesh_Freq", {1.4, 2.8, false}}, {"NUMA_Nodes", {1, 8, true}},
        {"Channels_per_Socket", {6, 12, true}},
        {"Memory_Speed_Supported", {4000, 5600, false}},
        {"TDP", {150, 400, true}},        {"Power_freq", {0.8, 2.0, false}},
    };
    auto it = table.find(name);
    return it == table.end() ? NumericRange{} : it->second;
}

inline std::vector<std::string> synth_pool(const std::string& name) {
    static const std::map<std::string, std::vector<std::string>> table = {
        {"Preset", {"default", "performance", "balanced", "maxperf"}},
        {"Microcode", {"0x2b0004b1", "0x2b0005c0", "0x2c000170"}},
        {"CPU_Stepping", {"E3", "E4", "E5"}},
        {"CPU_Family", {"gen-a 6430", "gen-a 8460", "gen-b 8570"}},
        {"OS", {"linux 5.15 lts", "linux 6.2 hwe", "linux 6.5"}},
        {"Benchmark_Tool", {"harness v2.1", "harness v2.3"}},
    };
    auto it = table.find(name);
    static const std::vector<std::string> fallback = {"alpha", "beta", "gamma"};
    return it == table.end() ? fallback : it->second;
}

// splitmix64: decorrelates per-record streams from (seed, index).
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Synthetic module lookup paired with the generator: part numbers carry the
// memory-organization fields the expansion step fills in.
inline DimmLookup synth_dimm_lookup() {
    DimmLookup lk;
    //                         generation density organization rank  CL
    lk.parts["SYN-D16R1"] = {"ddr5", "16", "1", "1", "40"};
    lk.parts["SYN-D32R2"] = {"ddr5", "32", "2", "2", "40"};
    lk.parts["SYN-D48R2"] = {"ddr5", "48", "2", "2", "46"};
    lk.parts["SYN-D64R2"] = {"ddr5", "64", "2", "2", "46"};
    return lk;
}

namespace detail {

// Standardized numeric vector for one record, using the handle's constants.
inline std::vector<double> truth_inputs(const std::vector<std::string>& values,
                                        const TruthFunction& tf) {
    std::vector<double> u(tf.numeric_idx.size());
    for (size_t i = 0; i < tf.numeric_idx.size(); ++i) {
        const double x = parse_double(values[static_cast<size_t>(tf.numeric_idx[i])], "synth oracle input");
        u[i] = (x - tf.mean[i]) / tf.stdev[i];
    }
    return u;
}

// Normalized per-group sums of the standardized inputs (unit-ish variance).
inline std::array<double, 3> group_scores(const TruthFunction& tf, const std::vector<double>& u) {
    std::array<double, 3> sum = {0, 0, 0};
    std::array<int, 3> count = {0, 0, 0};
    for (size_t i = 0; i < u.size(); ++i) {
        const int g = tf.group_id[i];
        sum[static_cast<size_t>(g)] += u[i];
        ++count[static_cast<size_t>(g)];
    }
    for (int g = 0; g < 3; ++g)
        if (count[static_cast<size_t>(g)] > 0)
            sum[static_cast<size_t>(g)] /= std::sqrt(static_cast<double>(count[static_cast<size_t>(g)]));
    return sum;
}

inline double eval_output(const TruthFunction& tf, const std::vector<double>& u, int j) {
    const size_t p = tf.numeric_idx.size();
    double lin = tf.intercept[static_cast<size_t>(j)];
    for (size_t i = 0; i < p; ++i) lin += tf.weights[static_cast<size_t>(j) * p + i] * u[i];
    if (tf.family == SynthFamily::Linear) return lin;
    const auto z = group_scores(tf, u);
    const double a = z[static_cast<size_t>(tf.pair_a[static_cast<size_t>(j)])];
    const double b = z[static_cast<size_t>(tf.pair_b[static_cast<size_t>(j)])];
    const double h = z[static_cast<size_t>(tf.hinge_idx[static_cast<size_t>(j)])];
    // tanh bounds both terms so the exp factor cannot push labels toward 0
    const double g = tf.pair_coef[static_cast<size_t>(j)] * std::tanh(a * b) +
                     tf.hinge_coef[static_cast<size_t>(j)] *
                         std::tanh(std::max(0.0, h - tf.hinge_knee[static_cast<size_t>(j)]));
    // exp keeps labels positive; `lin` acts as a per-output log-base level.
    return std::exp(std::log(lin) + tf.scale * g);
}

} // namespace detail

// Exact noiseless labels for one record's schema-order feature strings.
inline std::vector<double> oracle_label(const std::vector<std::string>& values,
                                        const TruthFunction& tf, int out_dim) {
    if (static_cast<int>(tf.intercept.size()) != out_dim)
        throw ShapeError("oracle_label: truth handle has " + std::to_string(tf.intercept.size()) +
                         " outputs, expected " + std::to_string(out_dim));
    const auto u = detail::truth_inputs(values, tf);
    std::vector<double> y(static_cast<size_t>(out_dim));
    for (int j = 0; j < out_dim; ++j) y[static_cast<size_t>(j)] = detail::eval_output(tf, u, j);
    return y;
}

namespace detail {

// In-sample MAPE of an ordinary least-squares fit on [1, u]; the generator's
// own linear-inadequacy check for the nonlinear family.
inline double linear_fit_mape(const std::vector<std::vector<double>>& u,
                              const std::vector<std::vector<double>>& y) {
    const int n = static_cast<int>(u.size());
    const int p = static_cast<int>(u[0].size()) + 1;
    const int m = static_cast<int>(y[0].size());
    std::vector<double> gram(static_cast<size_t>(p) * p, 0.0);
    auto x_of = [&](int r, int c) { return c == 0 ? 1.0 : u[static_cast<size_t>(r)][static_cast<size_t>(c - 1)]; };
    for (int r = 0; r < n; ++r)
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b)
                gram[static_cast<size_t>(a) * p + b] += x_of(r, a) * x_of(r, b);
    double total = 0.0;
    int count = 0;
    for (int j = 0; j < m; ++j) {
        std::vector<double> rhs(static_cast<size_t>(p), 0.0);
        for (int r = 0; r < n; ++r)
            for (int a = 0; a < p; ++a) rhs[static_cast<size_t>(a)] += x_of(r, a) * y[static_cast<size_t>(r)][static_cast<size_t>(j)];
        const auto beta = solve_spd(gram, rhs, p);
        for (int r = 0; r < n; ++r) {
            double pred = 0.0;
            for (int a = 0; a < p; ++a) pred += beta[static_cast<size_t>(a)] * x_of(r, a);
            const double t = y[static_cast<size_t>(r)][static_cast<size_t>(j)];
            if (t != 0.0) {
                total += std::abs(t - pred) / std::abs(t);
                ++count;
            }
        }
    }
    return count ? total / count : 0.0;
}

} // namespace detail

inline SynthResult generate(const SynthConfig& cfg, const FeatureSchema& schema) {
    cfg.validate();
    const SuiteSpec suite = find_suite(cfg.suite);
    const int m = suite.output_dim();
    const DimmLookup dimms = synth_dimm_lookup();
    std::vector<std::string> part_names;
    for (const auto& [k, v] : dimms.parts) part_names.push_back(k);

    SynthResult res;
    res.dataset.suite = suite;
    TruthFunction& tf = res.truth;
    tf.family = cfg.family;

    // DIMM-derived memory fields come from the part lookup; the rest of the
    // numerics are sampled from their declared ranges.
    static const std::set<std::string> dimm_derived = {"DIMM_rank", "Density", "Organization", "CL"};
    for (int i = 0; i < schema.size(); ++i) {
        const auto& f = schema.features[static_cast<size_t>(i)];
        if (f.kind != FeatureKind::Numeric) continue;
        tf.numeric_idx.push_back(i);
        tf.group_id.push_back(f.group == FeatureGroup::Memory ? 0
                              : f.group == FeatureGroup::Cpu  ? 1
                                                              : 2);
        if (f.name == "DIMM_Total") {
            tf.mean.push_back(320.0);
            tf.stdev.push_back(160.0);
        } else if (dimm_derived.count(f.name)) {
            // small discrete pools; rough constants are fine, they only fix
            // an affine reparameterization inside the truth function
            tf.mean.push_back(f.name == "CL" ? 43.0 : (f.name == "Density" ? 40.0 : 1.75));
            tf.stdev.push_back(f.name == "CL" ? 3.0 : (f.name == "Density" ? 18.0 : 0.45));
        } else {
            const auto r = detail::synth_range(f.name);
            tf.mean.push_back((r.lo + r.hi) / 2.0);
            tf.stdev.push_back(std::max((r.hi - r.lo) / std::sqrt(12.0), 1e-9));
        }
    }
    const size_t p = tf.numeric_idx.size();

    // Planted coefficients. Intercepts stay well above the reachable swing of
    // the linear part so labels remain positive.
    std::mt19937_64 coef_rng(cfg.seed ^ 0x5eedc0efULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::array<double, 3> group_count = {0, 0, 0};
    for (int g : tf.group_id) group_count[static_cast<size_t>(g)] += 1.0;
    std::vector<int> usable_groups;
    for (int g = 0; g < 3; ++g)
        if (group_count[static_cast<size_t>(g)] > 0) usable_groups.push_back(g);
    std::uniform_int_distribution<int> gpick(0, static_cast<int>(usable_groups.size()) - 1);
    tf.weights.assign(static_cast<size_t>(m) * p, 0.0);
    for (int j = 0; j < m; ++j) {
        tf.intercept.push_back(60.0 + 80.0 * std::abs(unit(coef_rng)));
        double abs_sum = 0.0;
        if (cfg.family == SynthFamily::NonlinearInteraction) {
            // Tie the linear part to the per-group scores: w_i = c_g / sqrt(n_g),
            // so the whole label depends on the inputs only through the three
            // group sums (plus the calibrated extras on the same sums).
            std::array<double, 3> c = {unit(coef_rng), unit(coef_rng), unit(coef_rng)};
            for (size_t i = 0; i < p; ++i) {
                const int g = tf.group_id[i];
                tf.weights[static_cast<size_t>(j) * p + i] =
                    c[static_cast<size_t>(g)] / std::sqrt(group_count[static_cast<size_t>(g)]);
                abs_sum += std::abs(tf.weights[static_cast<size_t>(j) * p + i]);
            }
        } else {
            for (size_t i = 0; i < p; ++i) {
                tf.weights[static_cast<size_t>(j) * p + i] = unit(coef_rng);
                abs_sum += std::abs(tf.weights[static_cast<size_t>(j) * p + i]);
            }
        }
        // scale so sqrt(3)*sum|w| <= 0.6*intercept (uniform u stays in +-sqrt 3)
        const double cap = 0.6 * tf.intercept.back() / (std::sqrt(3.0) * abs_sum);
        for (size_t i = 0; i < p; ++i) tf.weights[static_cast<size_t>(j) * p + i] *= cap;
        tf.pair_a.push_back(usable_groups[static_cast<size_t>(gpick(coef_rng))]);
        int b = usable_groups[static_cast<size_t>(gpick(coef_rng))];
        if (usable_groups.size() > 1)
            while (b == tf.pair_a.back()) b = usable_groups[static_cast<size_t>(gpick(coef_rng))];
        tf.pair_b.push_back(b);
        tf.pair_coef.push_back(0.5 + 0.5 * std::abs(unit(coef_rng)));
        tf.hinge_idx.push_back(usable_groups[static_cast<size_t>(gpick(coef_rng))]);
        tf.hinge_coef.push_back(0.5 + 0.5 * std::abs(unit(coef_rng)));
        tf.hinge_knee.push_back(0.4 * unit(coef_rng));
    }
    tf.scale = cfg.family == SynthFamily::Linear ? 0.0 : 0.25;

    // Deterministic per-record feature draws (counter-based streams).
    std::vector<std::vector<std::string>> all_values;
    for (int r = 0; r < cfg.n_records; ++r) {
        std::mt19937_64 rng(detail::mix64(cfg.seed) ^ detail::mix64(static_cast<uint64_t>(r) + 1));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const std::string part =
            part_names[static_cast<size_t>(rng() % part_names.size())];
        const DimmInfo& d = dimms.parts.at(part);
        res.dimm_parts.push_back(part);

        std::map<std::string, std::string> v;
        v["DIMM_rank"] = d.rank;
        v["Density"] = d.density;
        v["Organization"] = d.organization;
        v["CL"] = d.cl;
        for (const auto& f : schema.features) {
            if (v.count(f.name)) continue;
            if (f.kind == FeatureKind::Categorical) {
                const auto pool = detail::synth_pool(f.name);
                v[f.name] = pool[rng() % pool.size()];
            } else if (f.name == "DIMM_Total") {
                continue; // derived below
            } else {
                const auto rr = detail::synth_range(f.name);
                double x = rr.lo + (rr.hi - rr.lo) * u01(rng);
                if (rr.integral) x = std::round(x);
                v[f.name] = fmt_double(x);
            }
        }
        if (schema.index_of("DIMM_Total") >= 0) {
            const double density = parse_double(d.density, "synth density");
            const double dn = v.count("DIMM_Num") ? parse_double(v["DIMM_Num"], "synth DIMM_Num") : 1.0;
            v["DIMM_Total"] = fmt_double(density * dn);
        }
        std::vector<std::string> row;
        for (const auto& f : schema.features) row.push_back(v.at(f.name));
        all_values.push_back(std::move(row));
    }

    // Self-calibration: raise the nonlinear amplitude until a least-squares
    // fit on the standardized numerics misses by the configured margin.
    if (cfg.family == SynthFamily::NonlinearInteraction) {
        std::vector<std::vector<double>> us;
        for (const auto& row : all_values) us.push_back(detail::truth_inputs(row, tf));
        for (int it = 0; it < 40; ++it) {
            std::vector<std::vector<double>> ys;
            for (const auto& u : us) {
                std::vector<double> y(static_cast<size_t>(m));
                for (int j = 0; j < m; ++j) y[static_cast<size_t>(j)] = detail::eval_output(tf, u, j);
                ys.push_back(std::move(y));
            }
            res.calibration.linear_fit_mape = detail::linear_fit_mape(us, ys);
            res.calibration.iterations = it + 1;
            if (res.calibration.linear_fit_mape >= cfg.target_linear_mape) break;
            tf.scale *= 1.25;
        }
        res.calibration.scale = tf.scale;
        if (res.calibration.linear_fit_mape < cfg.target_linear_mape)
            throw NumericError("synth calibration failed to reach target linear-fit MAPE");
    }

    for (int r = 0; r < cfg.n_records; ++r) {
        ConsolidatedRecord rec;
        rec.values = all_values[static_cast<size_t>(r)];
        rec.labels = oracle_label(rec.values, tf, m);
        if (cfg.noise_sigma > 0) {
            std::mt19937_64 rng(detail::mix64(cfg.seed ^ 0xA05EULL) ^
                                detail::mix64(static_cast<uint64_t>(r) + 0x10001ULL));
            std::normal_distribution<double> gauss(0.0, cfg.noise_sigma);
            for (auto& y : rec.labels) y *= std::exp(gauss(rng));
        }
        rec.label_mask.assign(static_cast<size_t>(m), 1);
        res.dataset.records.push_back(std::move(rec));
    }
    return res;
}

// Raw run-level CSV in the shape ingest consumes: one row per (record,
// benchmark), with DIMM.PartNo and a couple of metadata columns the trim
// step must drop. With include_derived=false the module-derived columns are
// omitted so the lookup-expansion path is exercised instead.
inline CsvTable raw_runs_csv(const SynthResult& res, const FeatureSchema& schema,
                             bool include_derived = true) {
    static const std::set<std::string> dimm_derived = {"DIMM_rank", "Density", "Organization", "CL"};
    CsvTable t;
    t.header = {"Suite", "Benchmark", "Score", "DIMM.PartNo", "META.host_id", "META.qdf"};
    std::vector<int> kept_idx;
    for (int i = 0; i < schema.size(); ++i) {
        const auto& f = schema.features[static_cast<size_t>(i)];
        if (!include_derived && dimm_derived.count(f.name)) continue;
        t.header.push_back(f.name);
        kept_idx.push_back(i);
    }
    for (int r = 0; r < res.dataset.size(); ++r) {
        const auto& rec = res.dataset.records[static_cast<size_t>(r)];
        for (int j = 0; j < res.dataset.suite.output_dim(); ++j) {
            std::vector<std::string> row = {
                res.dataset.suite.name,
                res.dataset.suite.benchmarks[static_cast<size_t>(j)],
                fmt_double(rec.labels[static_cast<size_t>(j)]),
                res.dimm_parts[static_cast<size_t>(r)],
                "host-" + std::to_string(100 + r),
                "QSYN" + std::to_string(r % 7)};
            for (int i : kept_idx) row.push_back(rec.values[static_cast<size_t>(i)]);
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

// ---- truth persistence -----------------------------------------------------

inline nlohmann::json truth_to_json(const TruthFunction& tf) {
    return {{"family", to_string(tf.family)}, {"numeric_idx", tf.numeric_idx},
            {"mean", tf.mean},               {"stdev", tf.stdev},
            {"group_id", tf.group_id},
            {"intercept", tf.intercept},     {"weights", tf.weights},
            {"pair_a", tf.pair_a},           {"pair_b", tf.pair_b},
            {"pair_coef", tf.pair_coef},     {"hinge_idx", tf.hinge_idx},
            {"hinge_coef", tf.hinge_coef},   {"hinge_knee", tf.hinge_knee},
            {"scale", tf.scale}};
}

inline TruthFunction truth_from_json(const nlohmann::json& j) {
    TruthFunction tf;
    tf.family = family_from_string(j.at("family").get<std::string>());
    tf.numeric_idx = j.at("numeric_idx").get<std::vector<int>>();
    tf.mean = j.at("mean").get<std::vector<double>>();
    tf.stdev = j.at("stdev").get<std::vector<double>>();
    tf.group_id = j.at("group_id").get<std::vector<int>>();
    tf.intercept = j.at("intercept").get<std::vector<double>>();
    tf.weights = j.at("weights").get<std::vector<double>>();
    tf.pair_a = j.at("pair_a").get<std::vector<int>>();
    tf.pair_b = j.at("pair_b").get<std::vector<int>>();
    tf.pair_coef = j.at("pair_coef").get<std::vector<double>>();
    tf.hinge_idx = j.at("hinge_idx").get<std::vector<int>>();
    tf.hinge_coef = j.at("hinge_coef").get<std::vector<double>>();
    tf.hinge_knee = j.at("hinge_knee").get<std::vector<double>>();
    tf.scale = j.at("scale").get<double>();
    return tf;
}

} // namespace ncpp
