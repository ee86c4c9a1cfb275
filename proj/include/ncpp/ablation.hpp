#pragma once
// Six-arm attention ablation: full model, all intra-group attention off, and
// each single group's attention stack replaced by an identity pass-through.

#include <functional>
#include <string>
#include <vector>

#include "ncpp/csv.hpp"
#include "ncpp/metrics.hpp"
#include "ncpp/model.hpp"
#include "ncpp/train.hpp"

namespace ncpp {

struct AblationArm {
    std::string name;
    std::function<void(NCPPConfig&)> apply;
};

// Fixed row order for the comparison table.
inline std::vector<AblationArm> ablation_arms() {
    return {
        {"full", [](NCPPConfig&) {}},
        {"no-intra",
         [](NCPPConfig& c) { c.intra_memory = c.intra_cpu = c.intra_other = c.intra_char = false; }},
        {"no-memory", [](NCPPConfig& c) { c.intra_memory = false; }},
        {"no-other", [](NCPPConfig& c) { c.intra_other = false; }},
        {"no-cpu", [](NCPPConfig& c) { c.intra_cpu = false; }},
        {"no-workload", [](NCPPConfig& c) { c.intra_char = false; }},
    };
}

inline AblationArm find_ablation_arm(const std::string& name) {
    for (auto& a : ablation_arms())
        if (a.name == name) return a;
    throw DataError("unknown ablation arm: " + name);
}

struct AblationRow {
    std::string arm;
    double mae = 0, mse = 0, mape = 0;
};

struct AblationResult {
    std::vector<AblationRow> rows;      // ablation_arms() order
    std::vector<EvalReport> reports;
};

// Trains every arm with identical data, split, and seed; rows report the
// test-set overall metrics. Arm "full" is byte-for-byte a plain train run.
inline AblationResult run_ablation_suite(const NCPPConfig& base, const Dataset& ds,
                                         const SplitSpec& split, const TrainConfig& tc,
                                         const FeatureSchema& schema) {
    const auto idx = split_dataset(ds, split);
    const Dataset tr = subset(ds, idx.train), va = subset(ds, idx.val), te = subset(ds, idx.test);
    const Transforms tf = fit_transforms(tr, schema);
    AblationResult out;
    for (const auto& arm : ablation_arms()) {
        NCPPConfig cfg = base;
        arm.apply(cfg);
        cfg.validate();
        auto res = train(init_model(cfg, schema), tr, va, tf, tc);
        EvalReport rep = evaluate(res.best_params, te, tf);
        out.rows.push_back({arm.name, rep.overall.mae, rep.overall.mse, rep.overall.mape});
        out.reports.push_back(std::move(rep));
    }
    return out;
}

inline CsvTable ablation_table(const AblationResult& res) {
    CsvTable t;
    t.header = {"arm", "mae", "mse", "mape"};
    for (const auto& r : res.rows)
        t.rows.push_back({r.arm, fmt_double(r.mae), fmt_double(r.mse), fmt_double(r.mape)});
    return t;
}

} // namespace ncpp
