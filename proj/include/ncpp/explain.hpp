#pragma once
// Attention trace extraction, aggregated feature/group importance, and
// plot-ready data export.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/csv.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/model.hpp"

namespace ncpp {

enum class ImportanceReduction { ColumnMean, RowMean }; // attention received vs given

// n x n matrix for one (group, layer, head, sample) out of a traced forward.
inline std::vector<double> extract_attention(const AttentionTrace& trace, const std::string& group,
                                             int layer, int head, int sample, int* n_out = nullptr) {
    const auto* m = trace.find(group, layer, head);
    if (!m) throw DataError("no attention trace for group=" + group + " layer=" + std::to_string(layer) +
                            " head=" + std::to_string(head));
    if (sample < 0 || sample >= m->batch)
        throw DataError("sample index " + std::to_string(sample) + " out of batch " +
                        std::to_string(m->batch));
    const int n = m->n;
    if (n_out) *n_out = n;
    std::vector<double> out(static_cast<size_t>(n) * n);
    std::copy_n(m->weights.data() + static_cast<size_t>(sample) * n * n, n * n, out.data());
    return out;
}

// Mean attention matrix over the batch.
inline std::vector<double> extract_attention_mean(const AttentionTrace& trace, const std::string& group,
                                                  int layer, int head, int* n_out = nullptr) {
    const auto* m = trace.find(group, layer, head);
    if (!m) throw DataError("no attention trace for group=" + group);
    const int n = m->n;
    if (n_out) *n_out = n;
    std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
    for (int s = 0; s < m->batch; ++s)
        for (int i = 0; i < n * n; ++i)
            out[static_cast<size_t>(i)] += m->weights[static_cast<size_t>(s) * n * n + i] / m->batch;
    return out;
}

// score_j = mean over rows of A[i][j] (attention received), renormalized to
// sum 1. RowMean flips to attention given.
inline std::vector<double> aggregate_importance(const std::vector<double>& matrix, int n,
                                                ImportanceReduction red = ImportanceReduction::ColumnMean) {
    if (static_cast<int>(matrix.size()) != n * n)
        throw ShapeError("aggregate_importance: expected a square " + std::to_string(n) + "x" +
                         std::to_string(n) + " matrix");
    std::vector<double> score(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (red == ImportanceReduction::ColumnMean) score[static_cast<size_t>(j)] += matrix[static_cast<size_t>(i) * n + j] / n;
            else score[static_cast<size_t>(i)] += matrix[static_cast<size_t>(i) * n + j] / n;
        }
    double total = 0.0;
    for (double s : score) total += s;
    if (total > 0.0)
        for (auto& s : score) s /= total;
    return score;
}

struct ImportanceReport {
    std::string suite;
    std::string provenance; // "sample <i>" or "mean over batch"
    int head = 0, layer = 0;
    struct GroupScores {
        std::string group;
        std::vector<std::string> feature_names;
        std::vector<double> scores;          // sum 1
        std::vector<double> attention;       // n x n matrix
    };
    std::vector<GroupScores> groups; // memory/cpu/other/char
    GroupScores inter;               // 4 group-level scores
};

inline ImportanceReport build_importance_report(
    const AttentionTrace& trace, const Transforms& tf, const std::string& suite, int layer, int head,
    int sample /* -1 = batch mean */, ImportanceReduction red = ImportanceReduction::ColumnMean) {
    ImportanceReport rep;
    rep.suite = suite;
    rep.layer = layer;
    rep.head = head;
    rep.provenance = sample < 0 ? "mean over batch" : "sample " + std::to_string(sample);
    auto names_of = [&](const std::vector<int>& idxs) {
        std::vector<std::string> out;
        for (int i : idxs) out.push_back(tf.schema.features[static_cast<size_t>(i)].name);
        return out;
    };
    const std::vector<std::pair<std::string, std::vector<std::string>>> group_defs = {
        {"memory", names_of(tf.partition.memory)},
        {"cpu", names_of(tf.partition.cpu)},
        {"other", names_of(tf.partition.other)},
        {"char", names_of(tf.partition.chars)}};
    for (const auto& [gname, fnames] : group_defs) {
        if (!trace.find(gname, layer, head)) continue; // stack ablated or absent
        int n = 0;
        auto mat = sample < 0 ? extract_attention_mean(trace, gname, layer, head, &n)
                              : extract_attention(trace, gname, layer, head, sample, &n);
        ImportanceReport::GroupScores gs;
        gs.group = gname;
        gs.feature_names = fnames;
        gs.attention = mat;
        gs.scores = aggregate_importance(mat, n, red);
        rep.groups.push_back(std::move(gs));
    }
    if (trace.find("inter", layer, head)) {
        int n = 0;
        auto mat = sample < 0 ? extract_attention_mean(trace, "inter", layer, head, &n)
                              : extract_attention(trace, "inter", layer, head, sample, &n);
        rep.inter.group = "inter";
        rep.inter.feature_names = {"memory", "cpu", "other", "char"};
        if (static_cast<int>(rep.inter.feature_names.size()) != n)
            rep.inter.feature_names.resize(static_cast<size_t>(n), "group");
        rep.inter.attention = mat;
        rep.inter.scores = aggregate_importance(mat, n, red);
    }
    return rep;
}

// One (feature, score) CSV per group, one matrix CSV per group for heatmap
// rendering, plus a JSON bundle. Filenames encode suite/sample/head/layer.
inline std::vector<std::string> export_importance(const ImportanceReport& rep, const std::string& out_dir) {
    if (rep.groups.empty() && rep.inter.scores.empty())
        throw DataError("export_importance: empty report (traced batch was empty?)");
    std::vector<std::string> written;
    const std::string tag = rep.suite + "_" +
                            (rep.provenance == "mean over batch" ? "mean" : "sample" + rep.provenance.substr(7)) +
                            "_head" + std::to_string(rep.head) + "_layer" + std::to_string(rep.layer);
    auto dump_group = [&](const ImportanceReport::GroupScores& gs) {
        CsvTable t;
        t.header = {"feature", "score"};
        for (size_t i = 0; i < gs.scores.size(); ++i)
            t.rows.push_back({i < gs.feature_names.size() ? gs.feature_names[i] : "f" + std::to_string(i),
                              fmt_double(gs.scores[i])});
        const std::string path = out_dir + "/importance_" + tag + "_" + gs.group + ".csv";
        write_csv(t, path);
        written.push_back(path);
        const int n = static_cast<int>(gs.scores.size());
        CsvTable m;
        m.header.push_back("feature");
        for (int j = 0; j < n; ++j)
            m.header.push_back(j < static_cast<int>(gs.feature_names.size()) ? gs.feature_names[static_cast<size_t>(j)]
                                                                             : "f" + std::to_string(j));
        for (int i = 0; i < n; ++i) {
            std::vector<std::string> row;
            row.push_back(m.header[static_cast<size_t>(i) + 1]);
            for (int j = 0; j < n; ++j)
                row.push_back(fmt_double(gs.attention[static_cast<size_t>(i) * n + j]));
            m.rows.push_back(std::move(row));
        }
        const std::string mpath = out_dir + "/attention_" + tag + "_" + gs.group + ".csv";
        write_csv(m, mpath);
        written.push_back(mpath);
    };
    for (const auto& gs : rep.groups) dump_group(gs);
    if (!rep.inter.scores.empty()) dump_group(rep.inter);

    nlohmann::json j;
    j["suite"] = rep.suite;
    j["provenance"] = rep.provenance;
    j["head"] = rep.head;
    j["layer"] = rep.layer;
    auto gs_json = [](const ImportanceReport::GroupScores& gs) {
        return nlohmann::json{{"group", gs.group},
                              {"features", gs.feature_names},
                              {"scores", gs.scores},
                              {"attention", gs.attention}};
    };
    j["groups"] = nlohmann::json::array();
    for (const auto& gs : rep.groups) j["groups"].push_back(gs_json(gs));
    if (!rep.inter.scores.empty()) j["inter"] = gs_json(rep.inter);
    const std::string jpath = out_dir + "/importance_" + tag + ".json";
    std::ofstream out(jpath);
    if (!out) throw IoError("cannot write " + jpath);
    out << j.dump(2) << "\n";
    written.push_back(jpath);
    return written;
}

} // namespace ncpp
