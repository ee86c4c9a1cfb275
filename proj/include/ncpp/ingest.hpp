#pragma once
// Raw benchmark CSV parsing, outlier cleaning, DIMM feature expansion, and
// consolidation of per-benchmark rows into multi-output records.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ncpp/csv.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/schema.hpp"

namespace ncpp {

struct RawRecord {
    std::map<std::string, std::string> features; // column name -> value as read
    std::string benchmark;
    std::string suite;
    double score = 0.0;
};

struct ConsolidatedRecord {
    std::vector<std::string> values;  // schema order, raw strings
    std::vector<double> labels;       // suite benchmark order
    std::vector<uint8_t> label_mask;  // 1 where the label is present
};

struct Dataset {
    SuiteSpec suite;
    std::vector<ConsolidatedRecord> records;

    int size() const { return static_cast<int>(records.size()); }
};

struct DimmInfo {
    std::string generation, density, organization, rank, cl;
};

struct DimmLookup {
    std::map<std::string, DimmInfo> parts;
};

inline DimmLookup load_dimm_lookup(const std::string& path) {
    CsvTable t = read_csv(path);
    for (const char* col : {"part_no", "generation", "density", "organization", "rank", "CL"})
        if (t.column(col) < 0) throw DataError(path + ": missing column " + col);
    DimmLookup lk;
    const int cp = t.column("part_no"), cg = t.column("generation"), cd = t.column("density"),
              co = t.column("organization"), cr = t.column("rank"), cl = t.column("CL");
    for (const auto& row : t.rows) {
        const std::string& key = row[cp];
        if (lk.parts.count(key)) throw DataError(path + ": duplicate part number " + key);
        lk.parts[key] = {row[cg], row[cd], row[co], row[cr], row[cl]};
    }
    return lk;
}

// Unknown part numbers are data, not failure: nullopt and a caller-side count.
inline std::optional<DimmInfo> expand_dimm(const std::string& part_no, const DimmLookup& lookup) {
    auto it = lookup.parts.find(part_no);
    if (it == lookup.parts.end()) return std::nullopt;
    return it->second;
}

struct IngestStats {
    int rows_parsed = 0;
    int outliers_removed = 0;
    int incomplete_configs_dropped = 0;
    int unknown_dimm_parts = 0;
    std::vector<std::string> warnings;
};

// ---- parsing ---------------------------------------------------------------

// Columns DIMM_rank/Density/Organization/CL may be absent when DIMM.PartNo is
// present; expansion fills them from the lookup.
inline std::vector<RawRecord> parse_csv_records(const CsvTable& t, const FeatureSchema& schema,
                                                IngestStats* stats = nullptr) {
    const int c_suite = t.column("Suite");
    const int c_bench = t.column("Benchmark");
    const int c_score = t.column("Score");
    for (const char* col : {"Suite", "Benchmark", "Score"})
        if (t.column(col) < 0) throw DataError("raw csv: missing required column " + std::string(col));

    const bool has_partno = t.column("DIMM.PartNo") >= 0;
    static const std::set<std::string> dimm_derived = {"DIMM_rank", "Density", "Organization", "CL"};
    for (const auto& f : schema.features) {
        if (t.column(f.name) >= 0) continue;
        if (has_partno && dimm_derived.count(f.name)) continue;
        throw DataError("raw csv: missing feature column " + f.name);
    }

    std::vector<RawRecord> out;
    for (size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        RawRecord rec;
        rec.suite = row[c_suite];
        rec.benchmark = row[c_bench];
        if (rec.suite.empty() || rec.benchmark.empty())
            throw DataError("raw csv: empty suite/benchmark name at row " + std::to_string(r + 1));
        rec.score = parse_double(row[c_score], "Score, row " + std::to_string(r + 1));
        if (!std::isfinite(rec.score))
            throw DataError("raw csv: non-finite score at row " + std::to_string(r + 1));
        for (size_t c = 0; c < t.header.size(); ++c) {
            const std::string& name = t.header[c];
            if (name == "Suite" || name == "Benchmark" || name == "Score") continue;
            rec.features[name] = row[c];
        }
        // Validate numeric features up front so failures carry row numbers.
        for (const auto& f : schema.features) {
            if (f.kind != FeatureKind::Numeric) continue;
            auto it = rec.features.find(f.name);
            if (it != rec.features.end())
                parse_double(it->second, f.name + ", row " + std::to_string(r + 1));
        }
        out.push_back(std::move(rec));
    }
    if (stats) {
        stats->rows_parsed = static_cast<int>(out.size());
        if (out.empty()) stats->warnings.push_back("input has a header but no data rows");
    }
    return out;
}

inline std::vector<RawRecord> parse_csv_records(const std::string& path, const FeatureSchema& schema,
                                                IngestStats* stats = nullptr) {
    return parse_csv_records(read_csv(path), schema, stats);
}

// ---- cleaning / expansion --------------------------------------------------

// Indices whose |z| <= threshold under population statistics. sigma == 0 or
// fewer than 2 scores keeps everything.
inline std::vector<int> zscore_filter(const std::vector<double>& scores, double threshold = 3.0,
                                      bool* degenerate = nullptr) {
    std::vector<int> kept;
    const int n = static_cast<int>(scores.size());
    if (n < 2) {
        for (int i = 0; i < n; ++i) kept.push_back(i);
        if (degenerate) *degenerate = true;
        return kept;
    }
    if (degenerate) *degenerate = false;
    double mu = 0.0;
    for (double s : scores) mu += s;
    mu /= n;
    double var = 0.0;
    for (double s : scores) var += (s - mu) * (s - mu);
    var /= n;
    const double sigma = std::sqrt(var);
    for (int i = 0; i < n; ++i) {
        if (sigma == 0.0 || std::abs((scores[i] - mu) / sigma) <= threshold) kept.push_back(i);
    }
    return kept;
}

inline void apply_dimm_expansion(std::vector<RawRecord>& records, const DimmLookup& lookup,
                                 IngestStats* stats = nullptr) {
    for (auto& rec : records) {
        auto it = rec.features.find("DIMM.PartNo");
        if (it == rec.features.end()) continue;
        auto info = expand_dimm(it->second, lookup);
        if (!info) {
            if (stats) ++stats->unknown_dimm_parts;
            continue;
        }
        rec.features["DIMM_rank"] = info->rank;
        rec.features["Density"] = info->density;
        rec.features["Organization"] = info->organization;
        rec.features["CL"] = info->cl;
        rec.features["DIMM_Gen"] = info->generation;
    }
}

// Drops every column outside the schema (codenames, part numbers, metadata);
// errors if a schema column is still missing afterwards. Idempotent.
inline void trim_features(std::vector<RawRecord>& records, const FeatureSchema& schema) {
    for (auto& rec : records) {
        std::map<std::string, std::string> kept;
        for (const auto& f : schema.features) {
            auto it = rec.features.find(f.name);
            if (it == rec.features.end())
                throw DataError("record missing feature " + f.name + " after trim");
            kept[f.name] = it->second;
        }
        rec.features = std::move(kept);
    }
}

// Per-(suite, benchmark) z-score cleaning of label scores, before
// consolidation.
inline std::vector<RawRecord> clean_outliers(const std::vector<RawRecord>& records, double threshold,
                                             IngestStats* stats = nullptr) {
    std::map<std::pair<std::string, std::string>, std::vector<int>> by_bench;
    for (size_t i = 0; i < records.size(); ++i)
        by_bench[{records[i].suite, records[i].benchmark}].push_back(static_cast<int>(i));
    std::vector<uint8_t> keep(records.size(), 0);
    for (const auto& [key, idx] : by_bench) {
        std::vector<double> scores;
        for (int i : idx) scores.push_back(records[static_cast<size_t>(i)].score);
        bool degenerate = false;
        for (int k : zscore_filter(scores, threshold, &degenerate))
            keep[static_cast<size_t>(idx[static_cast<size_t>(k)])] = 1;
        if (degenerate && stats)
            stats->warnings.push_back("fewer than 2 scores for " + key.first + "/" + key.second +
                                      "; outlier filter skipped");
    }
    std::vector<RawRecord> out;
    for (size_t i = 0; i < records.size(); ++i) {
        if (keep[i]) out.push_back(records[i]);
        else if (stats) ++stats->outliers_removed;
    }
    return out;
}

// ---- consolidation ---------------------------------------------------------

enum class IncompletePolicy { Drop, Mask };

// One record per distinct hardware configuration (the full trimmed feature
// tuple); labels ordered per SuiteSpec.
inline Dataset consolidate_multi_output(const std::vector<RawRecord>& records, const SuiteSpec& suite,
                                        const FeatureSchema& schema,
                                        IncompletePolicy policy = IncompletePolicy::Drop,
                                        IngestStats* stats = nullptr) {
    std::map<std::string, int> bench_index;
    for (int j = 0; j < suite.output_dim(); ++j) bench_index[suite.benchmarks[static_cast<size_t>(j)]] = j;

    struct Group {
        std::vector<std::string> values;
        std::vector<double> labels;
        std::vector<uint8_t> present;
    };
    std::map<std::string, Group> groups; // keyed by the joined feature tuple
    for (const auto& rec : records) {
        if (rec.suite != suite.name) continue;
        auto bit = bench_index.find(rec.benchmark);
        if (bit == bench_index.end())
            throw DataError("benchmark " + rec.benchmark + " not in suite " + suite.name);
        std::string key;
        std::vector<std::string> values;
        for (const auto& f : schema.features) {
            const std::string& v = rec.features.at(f.name);
            key += v;
            key += '\x1f';
            values.push_back(v);
        }
        auto& g = groups[key];
        if (g.values.empty()) {
            g.values = std::move(values);
            g.labels.assign(static_cast<size_t>(suite.output_dim()), 0.0);
            g.present.assign(static_cast<size_t>(suite.output_dim()), 0);
        }
        const int j = bit->second;
        if (g.present[static_cast<size_t>(j)]) {
            if (g.labels[static_cast<size_t>(j)] != rec.score)
                throw DataError("ambiguous scores for one configuration on " + suite.name + "/" +
                                rec.benchmark + ": " + fmt_double(g.labels[static_cast<size_t>(j)]) +
                                " vs " + fmt_double(rec.score));
        } else {
            g.labels[static_cast<size_t>(j)] = rec.score;
            g.present[static_cast<size_t>(j)] = 1;
        }
    }

    Dataset ds;
    ds.suite = suite;
    for (auto& [key, g] : groups) {
        bool complete = true;
        for (uint8_t p : g.present) complete = complete && p;
        if (!complete && policy == IncompletePolicy::Drop) {
            if (stats) ++stats->incomplete_configs_dropped;
            continue;
        }
        ConsolidatedRecord rec;
        rec.values = std::move(g.values);
        rec.labels = std::move(g.labels);
        rec.label_mask = std::move(g.present);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

// ---- full pipeline + dataset persistence -----------------------------------

inline Dataset ingest_pipeline(const CsvTable& table, const FeatureSchema& schema, const SuiteSpec& suite,
                               const DimmLookup* lookup = nullptr, double z_threshold = 3.0,
                               IncompletePolicy policy = IncompletePolicy::Drop,
                               IngestStats* stats = nullptr) {
    auto records = parse_csv_records(table, schema, stats);
    if (lookup) apply_dimm_expansion(records, *lookup, stats);
    trim_features(records, schema);
    records = clean_outliers(records, z_threshold, stats);
    return consolidate_multi_output(records, suite, schema, policy, stats);
}

inline std::string label_column(const std::string& suite, const std::string& bench) {
    return suite + "::" + bench;
}

inline CsvTable dataset_to_csv(const Dataset& ds, const FeatureSchema& schema) {
    CsvTable t;
    t.header = schema.names();
    for (const auto& b : ds.suite.benchmarks) t.header.push_back(label_column(ds.suite.name, b));
    for (const auto& rec : ds.records) {
        std::vector<std::string> row = rec.values;
        for (double v : rec.labels) row.push_back(fmt_double(v));
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline Dataset dataset_from_csv(const CsvTable& t, const FeatureSchema& schema, const SuiteSpec& suite) {
    Dataset ds;
    ds.suite = suite;
    std::vector<int> feat_cols, label_cols;
    for (const auto& f : schema.features) {
        const int c = t.column(f.name);
        if (c < 0) throw DataError("consolidated csv: missing feature column " + f.name);
        feat_cols.push_back(c);
    }
    for (const auto& b : suite.benchmarks) {
        const int c = t.column(label_column(suite.name, b));
        if (c < 0) throw DataError("consolidated csv: missing label column " + label_column(suite.name, b));
        label_cols.push_back(c);
    }
    for (size_t r = 0; r < t.rows.size(); ++r) {
        ConsolidatedRecord rec;
        for (int c : feat_cols) rec.values.push_back(t.rows[r][static_cast<size_t>(c)]);
        for (int c : label_cols)
            rec.labels.push_back(parse_double(t.rows[r][static_cast<size_t>(c)],
                                              "label, row " + std::to_string(r + 1)));
        rec.label_mask.assign(rec.labels.size(), 1);
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

} // namespace ncpp
