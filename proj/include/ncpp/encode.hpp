#pragma once
// Fit-and-apply transformations: numeric z-standardization, categorical
// tokenization with padding and masks, group-wise batch assembly. Fitting
// touches the training split only.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/errors.hpp"
#include "ncpp/ingest.hpp"
#include "ncpp/schema.hpp"

namespace ncpp {

constexpr int kPadId = 0;
constexpr int kOovId = 1;

struct Vocab {
    std::map<std::string, int> token_to_id; // ids dense in [2, size)
    int t_max = 0;                          // max token count seen at fit time

    int id_of(const std::string& tok) const {
        auto it = token_to_id.find(tok);
        return it == token_to_id.end() ? kOovId : it->second;
    }
};

struct Transforms {
    FeatureSchema schema;
    GroupPartition partition;
    // Indexed by schema feature index; meaningful for numeric features only.
    std::vector<double> mean, stdev;
    std::vector<uint8_t> constant;
    int fitted_on = 0;
    // Per char feature, in partition.chars order.
    std::vector<Vocab> vocabs;
    int t_max = 0; // global pad width
    int vocab_cap = 100;
};

struct EncodedBatch {
    int batch = 0;
    std::vector<double> memory, cpu, other; // [batch x group_len], row-major
    int memory_len = 0, cpu_len = 0, other_len = 0;
    std::vector<int> char_ids;     // [batch x n_char x t_max]
    std::vector<uint8_t> char_mask; // true exactly at non-pad positions
    int n_char = 0, t_max = 0;
    std::vector<double> labels; // [batch x out_dim]
    int out_dim = 0;
};

// Lowercased maximal alphanumeric runs; everything else separates tokens.
inline std::vector<std::string> tokenize_value(const std::string& value) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double record_numeric(const ConsolidatedRecord& rec, int feature_idx, const FeatureSchema& schema) {
    return parse_double(rec.values[static_cast<size_t>(feature_idx)],
                        schema.features[static_cast<size_t>(feature_idx)].name);
}

inline void fit_normalizer(Transforms& tf, const Dataset& train) {
    if (train.records.empty()) throw DataError("fit_normalizer: empty training dataset");
    const int nf = tf.schema.size();
    tf.mean.assign(static_cast<size_t>(nf), 0.0);
    tf.stdev.assign(static_cast<size_t>(nf), 1.0);
    tf.constant.assign(static_cast<size_t>(nf), 0);
    tf.fitted_on = train.size();
    const int n = train.size();
    for (int i = 0; i < nf; ++i) {
        if (tf.schema.features[static_cast<size_t>(i)].kind != FeatureKind::Numeric) continue;
        double mu = 0.0;
        for (const auto& rec : train.records) mu += record_numeric(rec, i, tf.schema);
        mu /= n;
        double var = 0.0;
        for (const auto& rec : train.records) {
            const double d = record_numeric(rec, i, tf.schema) - mu;
            var += d * d;
        }
        var /= n; // population
        tf.mean[static_cast<size_t>(i)] = mu;
        const double sd = std::sqrt(var);
        if (sd == 0.0) {
            tf.stdev[static_cast<size_t>(i)] = 1.0;
            tf.constant[static_cast<size_t>(i)] = 1;
        } else {
            tf.stdev[static_cast<size_t>(i)] = sd;
        }
    }
}

// Most frequent tokens up to cap-2 (pad and OOV reserved); frequency ties
// break lexicographically. t_max = max token count observed per feature.
inline void fit_tokenizer(Transforms& tf, const Dataset& train, int cap = 100) {
    tf.vocab_cap = cap;
    tf.vocabs.clear();
    tf.t_max = 0;
    for (int fi : tf.partition.chars) {
        std::map<std::string, int> freq;
        int t_max = 0;
        for (const auto& rec : train.records) {
            auto toks = tokenize_value(rec.values[static_cast<size_t>(fi)]);
            t_max = std::max(t_max, static_cast<int>(toks.size()));
            for (const auto& t : toks) ++freq[t];
        }
        std::vector<std::pair<std::string, int>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        Vocab v;
        v.t_max = std::max(t_max, 1);
        int next_id = 2;
        for (const auto& [tok, cnt] : ranked) {
            if (next_id >= cap) break;
            v.token_to_id[tok] = next_id++;
        }
        tf.t_max = std::max(tf.t_max, v.t_max);
        tf.vocabs.push_back(std::move(v));
    }
    if (tf.t_max == 0) tf.t_max = 1;
}

inline Transforms fit_transforms(const Dataset& train, const FeatureSchema& schema, int vocab_cap = 100) {
    Transforms tf;
    tf.schema = schema;
    tf.partition = group_partition(schema);
    fit_normalizer(tf, train);
    fit_tokenizer(tf, train, vocab_cap);
    return tf;
}

inline double apply_normalizer(const Transforms& tf, int feature_idx, double x) {
    return (x - tf.mean[static_cast<size_t>(feature_idx)]) / tf.stdev[static_cast<size_t>(feature_idx)];
}

inline double invert_normalizer(const Transforms& tf, int feature_idx, double z) {
    return z * tf.stdev[static_cast<size_t>(feature_idx)] + tf.mean[static_cast<size_t>(feature_idx)];
}

// Encodes the selected records. Overlong token sequences at inference
// truncate to the fitted t_max (counted in *truncations).
inline EncodedBatch encode_batch(const Dataset& ds, const std::vector<int>& indices, const Transforms& tf,
                                 int* truncations = nullptr) {
    EncodedBatch b;
    b.batch = static_cast<int>(indices.size());
    b.memory_len = static_cast<int>(tf.partition.memory.size());
    b.cpu_len = static_cast<int>(tf.partition.cpu.size());
    b.other_len = static_cast<int>(tf.partition.other.size());
    b.n_char = static_cast<int>(tf.partition.chars.size());
    b.t_max = tf.t_max;
    b.out_dim = ds.suite.output_dim();
    b.memory.assign(static_cast<size_t>(b.batch * b.memory_len), 0.0);
    b.cpu.assign(static_cast<size_t>(b.batch * b.cpu_len), 0.0);
    b.other.assign(static_cast<size_t>(b.batch * b.other_len), 0.0);
    b.char_ids.assign(static_cast<size_t>(b.batch * b.n_char * b.t_max), kPadId);
    b.char_mask.assign(static_cast<size_t>(b.batch * b.n_char * b.t_max), 0);
    b.labels.assign(static_cast<size_t>(b.batch * b.out_dim), 0.0);

    auto fill_numeric = [&](const std::vector<int>& idxs, std::vector<double>& dst, int len, int row,
                            const ConsolidatedRecord& rec) {
        for (int k = 0; k < len; ++k) {
            const int fi = idxs[static_cast<size_t>(k)];
            dst[static_cast<size_t>(row * len + k)] =
                apply_normalizer(tf, fi, record_numeric(rec, fi, tf.schema));
        }
    };

    for (int r = 0; r < b.batch; ++r) {
        const auto& rec = ds.records.at(static_cast<size_t>(indices[static_cast<size_t>(r)]));
        fill_numeric(tf.partition.memory, b.memory, b.memory_len, r, rec);
        fill_numeric(tf.partition.cpu, b.cpu, b.cpu_len, r, rec);
        fill_numeric(tf.partition.other, b.other, b.other_len, r, rec);
        for (int f = 0; f < b.n_char; ++f) {
            const int fi = tf.partition.chars[static_cast<size_t>(f)];
            auto toks = tokenize_value(rec.values[static_cast<size_t>(fi)]);
            if (static_cast<int>(toks.size()) > b.t_max) {
                if (truncations) ++*truncations;
                toks.resize(static_cast<size_t>(b.t_max));
            }
            for (size_t t = 0; t < toks.size(); ++t) {
                const size_t pos = static_cast<size_t>((r * b.n_char + f) * b.t_max) + t;
                b.char_ids[pos] = tf.vocabs[static_cast<size_t>(f)].id_of(toks[t]);
                b.char_mask[pos] = 1;
            }
        }
        for (int j = 0; j < b.out_dim; ++j)
            b.labels[static_cast<size_t>(r * b.out_dim + j)] = rec.labels[static_cast<size_t>(j)];
    }
    return b;
}

inline std::vector<int> all_indices(const Dataset& ds) {
    std::vector<int> idx(static_cast<size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) idx[static_cast<size_t>(i)] = i;
    return idx;
}

// ---- persistence -----------------------------------------------------------

inline nlohmann::json transforms_to_json(const Transforms& tf) {
    nlohmann::json j;
    j["version"] = 1;
    j["schema"] = schema_to_json(tf.schema);
    j["vocab_cap"] = tf.vocab_cap;
    j["t_max"] = tf.t_max;
    j["fitted_on"] = tf.fitted_on;
    nlohmann::json stats = nlohmann::json::array();
    for (int i = 0; i < tf.schema.size(); ++i) {
        if (tf.schema.features[static_cast<size_t>(i)].kind != FeatureKind::Numeric) continue;
        stats.push_back({{"name", tf.schema.features[static_cast<size_t>(i)].name},
                         {"mean", tf.mean[static_cast<size_t>(i)]},
                         {"std", tf.stdev[static_cast<size_t>(i)]},
                         {"constant", static_cast<bool>(tf.constant[static_cast<size_t>(i)])}});
    }
    j["normalizer"] = stats;
    nlohmann::json vocabs = nlohmann::json::array();
    for (size_t f = 0; f < tf.vocabs.size(); ++f) {
        nlohmann::json v;
        v["feature"] = tf.schema.features[static_cast<size_t>(tf.partition.chars[f])].name;
        v["pad_id"] = kPadId;
        v["oov_id"] = kOovId;
        v["t_max"] = tf.vocabs[f].t_max;
        v["tokens"] = tf.vocabs[f].token_to_id;
        vocabs.push_back(v);
    }
    j["vocabs"] = vocabs;
    return j;
}

inline Transforms transforms_from_json(const nlohmann::json& j) {
    Transforms tf;
    tf.schema = schema_from_json(j.at("schema"));
    tf.partition = group_partition(tf.schema);
    tf.vocab_cap = j.at("vocab_cap").get<int>();
    tf.t_max = j.at("t_max").get<int>();
    tf.fitted_on = j.value("fitted_on", 0);
    const int nf = tf.schema.size();
    tf.mean.assign(static_cast<size_t>(nf), 0.0);
    tf.stdev.assign(static_cast<size_t>(nf), 1.0);
    tf.constant.assign(static_cast<size_t>(nf), 0);
    for (const auto& s : j.at("normalizer")) {
        const int i = tf.schema.index_of(s.at("name").get<std::string>());
        if (i < 0) throw DataError("transforms json: unknown feature " + s.at("name").get<std::string>());
        tf.mean[static_cast<size_t>(i)] = s.at("mean").get<double>();
        tf.stdev[static_cast<size_t>(i)] = s.at("std").get<double>();
        tf.constant[static_cast<size_t>(i)] = s.at("constant").get<bool>() ? 1 : 0;
    }
    for (const auto& v : j.at("vocabs")) {
        Vocab vb;
        vb.t_max = v.at("t_max").get<int>();
        vb.token_to_id = v.at("tokens").get<std::map<std::string, int>>();
        tf.vocabs.push_back(std::move(vb));
    }
    if (tf.vocabs.size() != tf.partition.chars.size())
        throw DataError("transforms json: vocab count does not match categorical feature count");
    return tf;
}

} // namespace ncpp
