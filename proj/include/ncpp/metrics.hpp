#pragma once
// Metric computation (MAE/MSE/MAPE and P95 variants), per-benchmark
// breakdowns, CV aggregation, and report serialization. MAPE values are
// stored as fractions (0.75 == 75%).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/csv.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/schema.hpp"

namespace ncpp {

struct MetricRow {
    std::string benchmark; // "overall" for the pooled row
    double mae = 0, mse = 0, mape = 0;
    double p95_ae = 0, p95_se = 0, p95_ape = 0;
    int count = 0;          // evaluated elements
    int mape_excluded = 0;  // zero-truth entries excluded from MAPE/APE
};

struct EvalReport {
    std::string suite;
    std::vector<MetricRow> per_benchmark;
    MetricRow overall;
    int folds = 1;
};

enum class PercentileMethod { NearestRank, Linear };

inline double percentile(std::vector<double> v, double p, PercentileMethod method = PercentileMethod::NearestRank) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const int n = static_cast<int>(v.size());
    if (method == PercentileMethod::NearestRank) {
        int rank = static_cast<int>(std::ceil(p * n)); // smallest order statistic with rank >= ceil(p*n)
        rank = std::clamp(rank, 1, n);
        return v[static_cast<size_t>(rank - 1)];
    }
    const double h = p * (n - 1);
    const int lo = static_cast<int>(std::floor(h));
    const int hi = std::min(lo + 1, n - 1);
    return v[static_cast<size_t>(lo)] + (h - lo) * (v[static_cast<size_t>(hi)] - v[static_cast<size_t>(lo)]);
}

namespace detail {

inline MetricRow metrics_from_errors(const std::string& name, const std::vector<double>& err,
                                     const std::vector<double>& truth, PercentileMethod method) {
    MetricRow row;
    row.benchmark = name;
    row.count = static_cast<int>(err.size());
    std::vector<double> ae, se, ape;
    for (size_t i = 0; i < err.size(); ++i) {
        const double a = std::abs(err[i]);
        ae.push_back(a);
        se.push_back(err[i] * err[i]);
        if (truth[i] != 0.0) ape.push_back(a / std::abs(truth[i]));
        else ++row.mape_excluded;
    }
    for (double a : ae) row.mae += a;
    for (double s : se) row.mse += s;
    for (double p : ape) row.mape += p;
    if (!ae.empty()) {
        row.mae /= static_cast<double>(ae.size());
        row.mse /= static_cast<double>(se.size());
    }
    if (ape.empty()) throw DataError("MAPE undefined: all truth values are zero for " + name);
    row.mape /= static_cast<double>(ape.size());
    row.p95_ae = percentile(ae, 0.95, method);
    row.p95_se = percentile(se, 0.95, method);
    row.p95_ape = percentile(ape, 0.95, method);
    return row;
}

} // namespace detail

// pred/truth: row-major [n x out_dim]; per-benchmark rows are per output
// column, overall pools all elements.
inline EvalReport compute_metrics(const std::vector<double>& pred, const std::vector<double>& truth,
                                  const SuiteSpec& suite,
                                  PercentileMethod method = PercentileMethod::NearestRank) {
    const int m = suite.output_dim();
    if (pred.size() != truth.size() || pred.size() % static_cast<size_t>(m) != 0)
        throw ShapeError("compute_metrics: pred/truth must both be n x " + std::to_string(m));
    const int n = static_cast<int>(pred.size()) / m;
    EvalReport rep;
    rep.suite = suite.name;
    std::vector<double> all_err, all_truth;
    for (int j = 0; j < m; ++j) {
        std::vector<double> err, tr;
        for (int i = 0; i < n; ++i) {
            const double t = truth[static_cast<size_t>(i * m + j)];
            const double e = t - pred[static_cast<size_t>(i * m + j)];
            err.push_back(e);
            tr.push_back(t);
            all_err.push_back(e);
            all_truth.push_back(t);
        }
        rep.per_benchmark.push_back(
            detail::metrics_from_errors(suite.benchmarks[static_cast<size_t>(j)], err, tr, method));
    }
    rep.overall = detail::metrics_from_errors("overall", all_err, all_truth, method);
    return rep;
}

// Unweighted mean of each metric across folds.
inline EvalReport aggregate_cv(const std::vector<EvalReport>& reports) {
    if (reports.size() < 2) throw DataError("aggregate_cv: need at least 2 fold reports");
    for (const auto& r : reports)
        if (r.suite != reports[0].suite) throw DataError("aggregate_cv: suite mismatch");
    EvalReport agg = reports[0];
    agg.folds = static_cast<int>(reports.size());
    auto acc = [&](MetricRow& dst, const std::function<const MetricRow&(const EvalReport&)>& get) {
        dst = get(reports[0]);
        for (size_t k = 1; k < reports.size(); ++k) {
            const MetricRow& r = get(reports[k]);
            dst.mae += r.mae;
            dst.mse += r.mse;
            dst.mape += r.mape;
            dst.p95_ae += r.p95_ae;
            dst.p95_se += r.p95_se;
            dst.p95_ape += r.p95_ape;
            dst.count += r.count;
        }
        const double k = static_cast<double>(reports.size());
        dst.mae /= k;
        dst.mse /= k;
        dst.mape /= k;
        dst.p95_ae /= k;
        dst.p95_se /= k;
        dst.p95_ape /= k;
    };
    for (size_t j = 0; j < agg.per_benchmark.size(); ++j)
        acc(agg.per_benchmark[j], [j](const EvalReport& r) -> const MetricRow& {
            return r.per_benchmark[j];
        });
    acc(agg.overall, [](const EvalReport& r) -> const MetricRow& { return r.overall; });
    return agg;
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::json report_to_json(const EvalReport& rep) {
    auto row = [](const MetricRow& r) {
        return nlohmann::json{{"benchmark", r.benchmark}, {"mae", r.mae},       {"mse", r.mse},
                              {"mape", r.mape},           {"p95_ae", r.p95_ae}, {"p95_se", r.p95_se},
                              {"p95_ape", r.p95_ape},     {"count", r.count},
                              {"mape_excluded", r.mape_excluded}};
    };
    nlohmann::json j;
    j["suite"] = rep.suite;
    j["folds"] = rep.folds;
    j["overall"] = row(rep.overall);
    j["per_benchmark"] = nlohmann::json::array();
    for (const auto& r : rep.per_benchmark) j["per_benchmark"].push_back(row(r));
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    auto row = [](const nlohmann::json& r) {
        MetricRow m;
        m.benchmark = r.at("benchmark").get<std::string>();
        m.mae = r.at("mae").get<double>();
        m.mse = r.at("mse").get<double>();
        m.mape = r.at("mape").get<double>();
        m.p95_ae = r.at("p95_ae").get<double>();
        m.p95_se = r.at("p95_se").get<double>();
        m.p95_ape = r.at("p95_ape").get<double>();
        m.count = r.at("count").get<int>();
        m.mape_excluded = r.value("mape_excluded", 0);
        return m;
    };
    EvalReport rep;
    rep.suite = j.at("suite").get<std::string>();
    rep.folds = j.value("folds", 1);
    rep.overall = row(j.at("overall"));
    for (const auto& r : j.at("per_benchmark")) rep.per_benchmark.push_back(row(r));
    return rep;
}

// Writes <stem>.json, <stem>.csv, and a radar-plot-ready per-benchmark MAPE
// table <stem>_radar.csv.
inline void export_report(const EvalReport& rep, const std::string& stem) {
    {
        std::ofstream out(stem + ".json");
        if (!out) throw IoError("cannot write " + stem + ".json");
        out << report_to_json(rep).dump(2) << "\n";
    }
    CsvTable t;
    t.header = {"benchmark", "mae", "mse", "mape", "p95_ae", "p95_se", "p95_ape", "count"};
    auto push = [&](const MetricRow& r) {
        t.rows.push_back({r.benchmark, fmt_double(r.mae), fmt_double(r.mse), fmt_double(r.mape),
                          fmt_double(r.p95_ae), fmt_double(r.p95_se), fmt_double(r.p95_ape),
                          std::to_string(r.count)});
    };
    for (const auto& r : rep.per_benchmark) push(r);
    push(rep.overall);
    write_csv(t, stem + ".csv");

    CsvTable radar;
    radar.header = {"benchmark", "mape"};
    for (const auto& r : rep.per_benchmark) radar.rows.push_back({r.benchmark, fmt_double(r.mape)});
    write_csv(radar, stem + "_radar.csv");
}

} // namespace ncpp
