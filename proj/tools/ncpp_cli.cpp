// Command-line front end for the grouped-attention benchmark-score predictor:
// data ingestion, training, cross-validation, evaluation, prediction,
// attention export, synthetic data generation, and the ablation harness.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncpp/ncpp.hpp"

namespace {

using namespace ncpp;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

FeatureSchema schema_from_opt(const std::string& path) {
    return path.empty() ? default_schema() : load_schema(path);
}

// NCPP_SEED wins over flags and config files.
uint64_t resolve_seed(uint64_t configured) {
    if (const char* env = std::getenv("NCPP_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw DataError("NCPP_SEED is not an unsigned integer: " + std::string(env));
        }
    }
    return configured;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

// Accepts either raw run-level CSV (Suite/Benchmark/Score rows) or an
// already-consolidated table; raw input goes through the full ingest pipeline.
Dataset load_any_dataset(const std::string& path, const FeatureSchema& schema, const SuiteSpec& suite,
                         const std::string& dimm_path, double z_threshold, IncompletePolicy policy,
                         IngestStats* stats = nullptr) {
    CsvTable t = read_csv(path);
    if (t.column("Suite") >= 0 && t.column("Benchmark") >= 0 && t.column("Score") >= 0) {
        DimmLookup lk;
        const DimmLookup* lkp = nullptr;
        if (!dimm_path.empty()) {
            lk = load_dimm_lookup(dimm_path);
            lkp = &lk;
        }
        return ingest_pipeline(t, schema, suite, lkp, z_threshold, policy, stats);
    }
    return dataset_from_csv(t, schema, suite);
}

// Flag values beat config-file values beat defaults.
template <typename T>
void layer_option(const CLI::App* cmd, const std::string& flag, const nlohmann::json* cfg,
                  const char* key, T& value) {
    if (cfg && cfg->contains(key)) value = cfg->at(key).get<T>();
    const CLI::Option* opt = cmd->get_option(flag);
    if (opt->count() > 0) value = opt->as<T>();
}

struct CommonTrainOpts {
    std::string data, suite_name, schema_path, config_path, dimm_path, out_dir = ".";
    double z_threshold = 3.0;
    bool mask_incomplete = false;
    // model
    int heads = 2, layers = 1, d_model = 64;
    double delta = 1.0;
    // training
    int epochs = 1000, batch_size = 64;
    double lr = 0.01, decay_rate = 0.96;
    int decay_steps = 1000;
    double stop_train_mape = 0.0;
    uint64_t seed = 42;
    // split
    double f_train = 0.6, f_val = 0.2, f_test = 0.2;
};

void add_common_train_flags(CLI::App* cmd, CommonTrainOpts& o) {
    cmd->add_option("--data", o.data, "input CSV (raw runs or consolidated)")->required();
    cmd->add_option("--suite", o.suite_name, "benchmark suite name")->required();
    cmd->add_option("--schema", o.schema_path, "feature schema JSON (default: built-in 35 features)");
    cmd->add_option("--config", o.config_path, "JSON config file (model/train/split sections)");
    cmd->add_option("--dimm-lookup", o.dimm_path, "memory part-number lookup CSV");
    cmd->add_option("--out-dir", o.out_dir, "artifact output directory");
    cmd->add_option("--z-threshold", o.z_threshold, "outlier z-score threshold");
    cmd->add_flag("--mask-incomplete", o.mask_incomplete,
                  "keep configurations with missing benchmarks (masked labels)");
    cmd->add_option("--heads", o.heads, "attention heads");
    cmd->add_option("--layers", o.layers, "attention layers per stack");
    cmd->add_option("--d-model", o.d_model, "model width");
    cmd->add_option("--delta", o.delta, "Huber loss delta");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--lr", o.lr, "initial learning rate");
    cmd->add_option("--decay-rate", o.decay_rate, "exponential lr decay rate");
    cmd->add_option("--decay-steps", o.decay_steps, "lr decay step constant");
    cmd->add_option("--stop-train-mape", o.stop_train_mape,
                    "stop early when train MAPE falls below this fraction (0 = off)");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--train-frac", o.f_train, "train split fraction");
    cmd->add_option("--val-frac", o.f_val, "validation split fraction");
    cmd->add_option("--test-frac", o.f_test, "test split fraction");
}

struct ResolvedTrainSetup {
    FeatureSchema schema;
    SuiteSpec suite;
    Dataset dataset;
    NCPPConfig model;
    TrainConfig tc;
    SplitSpec split;
    nlohmann::json effective;
};

ResolvedTrainSetup resolve_train_setup(const CLI::App* cmd, CommonTrainOpts& o) {
    std::optional<nlohmann::json> cfg;
    if (!o.config_path.empty()) cfg = load_json_file(o.config_path);
    const nlohmann::json* model_cfg = cfg && cfg->contains("model") ? &cfg->at("model") : nullptr;
    const nlohmann::json* train_cfg = cfg && cfg->contains("train") ? &cfg->at("train") : nullptr;
    const nlohmann::json* split_cfg = cfg && cfg->contains("split") ? &cfg->at("split") : nullptr;

    layer_option(cmd, "--heads", model_cfg, "heads", o.heads);
    layer_option(cmd, "--layers", model_cfg, "layers", o.layers);
    layer_option(cmd, "--d-model", model_cfg, "d_model", o.d_model);
    layer_option(cmd, "--delta", model_cfg, "huber_delta", o.delta);
    layer_option(cmd, "--epochs", train_cfg, "epochs", o.epochs);
    layer_option(cmd, "--batch-size", train_cfg, "batch_size", o.batch_size);
    layer_option(cmd, "--lr", train_cfg, "lr", o.lr);
    layer_option(cmd, "--decay-rate", train_cfg, "decay_rate", o.decay_rate);
    layer_option(cmd, "--decay-steps", train_cfg, "decay_steps", o.decay_steps);
    layer_option(cmd, "--stop-train-mape", train_cfg, "stop_train_mape", o.stop_train_mape);
    layer_option(cmd, "--seed", train_cfg, "seed", o.seed);
    layer_option(cmd, "--train-frac", split_cfg, "train", o.f_train);
    layer_option(cmd, "--val-frac", split_cfg, "val", o.f_val);
    layer_option(cmd, "--test-frac", split_cfg, "test", o.f_test);
    o.seed = resolve_seed(o.seed);

    ResolvedTrainSetup s;
    s.schema = schema_from_opt(o.schema_path);
    s.suite = find_suite(o.suite_name);
    s.dataset = load_any_dataset(o.data, s.schema, s.suite, o.dimm_path, o.z_threshold,
                                 o.mask_incomplete ? IncompletePolicy::Mask : IncompletePolicy::Drop);
    s.model.heads = o.heads;
    s.model.layers = o.layers;
    s.model.d_model = o.d_model;
    s.model.huber_delta = o.delta;
    s.model.output_dim = s.suite.output_dim();
    s.model.seed = o.seed;
    s.model.validate();
    s.tc.epochs = o.epochs;
    s.tc.batch_size = o.batch_size;
    s.tc.lr.initial = o.lr;
    s.tc.lr.decay_rate = o.decay_rate;
    s.tc.lr.decay_steps = o.decay_steps;
    s.tc.stop_train_mape = o.stop_train_mape;
    s.tc.seed = o.seed;
    s.split.train = o.f_train;
    s.split.val = o.f_val;
    s.split.test = o.f_test;
    s.split.seed = o.seed;
    s.split.validate();

    s.effective = {{"model", config_to_json(s.model)},
                   {"train",
                    {{"epochs", s.tc.epochs},
                     {"batch_size", s.tc.batch_size},
                     {"lr", s.tc.lr.initial},
                     {"decay_rate", s.tc.lr.decay_rate},
                     {"decay_steps", s.tc.lr.decay_steps},
                     {"stop_train_mape", s.tc.stop_train_mape},
                     {"seed", s.tc.seed}}},
                   {"split", {{"train", s.split.train}, {"val", s.split.val}, {"test", s.split.test}}}};
    return s;
}

RunManifest start_manifest(const std::string& command, const CommonTrainOpts& o) {
    RunManifest m;
    m.command = command;
    m.seed = o.seed;
    m.add_input(o.data);
    if (!o.config_path.empty()) {
        m.config_path = o.config_path;
        m.config_hash = hash_file(o.config_path);
    }
    if (!o.schema_path.empty()) m.add_input(o.schema_path);
    if (!o.dimm_path.empty()) m.add_input(o.dimm_path);
    return m;
}

// ---- subcommands -----------------------------------------------------------

int cmd_ingest(const std::string& data, const std::string& suite_name, const std::string& schema_path,
               const std::string& dimm_path, double z_threshold, bool mask_incomplete,
               const std::string& out) {
    Timer timer;
    const FeatureSchema schema = schema_from_opt(schema_path);
    const SuiteSpec suite = find_suite(suite_name);
    IngestStats stats;
    Dataset ds = load_any_dataset(data, schema, suite, dimm_path, z_threshold,
                                  mask_incomplete ? IncompletePolicy::Mask : IncompletePolicy::Drop,
                                  &stats);
    write_csv(dataset_to_csv(ds, schema), out);
    RunManifest m;
    m.command = "ingest";
    m.add_input(data);
    if (!schema_path.empty()) m.add_input(schema_path);
    if (!dimm_path.empty()) m.add_input(dimm_path);
    m.artifacts = {out};
    m.wall_time_s = timer.seconds();
    const std::string dir = std::filesystem::path(out).parent_path().string();
    write_manifest(m, dir.empty() ? "." : dir);
    std::cout << "ingest: " << stats.rows_parsed << " rows -> " << ds.size() << " configurations ("
              << stats.outliers_removed << " outliers removed, " << stats.incomplete_configs_dropped
              << " incomplete dropped, " << stats.unknown_dimm_parts << " unknown memory parts)\n";
    for (const auto& w : stats.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_train(const CLI::App* cmd, CommonTrainOpts& o) {
    Timer timer;
    ResolvedTrainSetup s = resolve_train_setup(cmd, o);
    ensure_dir(o.out_dir);
    const auto idx = split_dataset(s.dataset, s.split);
    Dataset tr = subset(s.dataset, idx.train), va = subset(s.dataset, idx.val),
            te = subset(s.dataset, idx.test);
    Transforms tf = fit_transforms(tr, s.schema);
    TrainResult res = train(init_model(s.model, s.schema), tr, va, tf, s.tc);

    const std::string ckpt = o.out_dir + "/model.ckpt";
    save_model_bundle(res.best_params, tf, s.suite, ckpt);
    write_csv(history_to_csv(res.history), o.out_dir + "/history.csv");
    EvalReport rep = evaluate(res.best_params, te, tf);
    export_report(rep, o.out_dir + "/report");

    RunManifest m = start_manifest("train", o);
    m.effective_config = s.effective;
    m.artifacts = {ckpt, ckpt + ".json", o.out_dir + "/history.csv", o.out_dir + "/report.json",
                   o.out_dir + "/report.csv", o.out_dir + "/report_radar.csv"};
    m.wall_time_s = timer.seconds();
    write_manifest(m, o.out_dir);
    verify_manifest_artifacts(m);
    std::cout << "train: " << res.history.epochs_run << " epochs, best val loss "
              << fmt_double(res.best_val_loss) << " at epoch " << res.best_epoch
              << "; test MAPE " << fmt_double(rep.overall.mape * 100.0) << "%\n";
    return 0;
}

int cmd_cv(const CLI::App* cmd, CommonTrainOpts& o, int k) {
    Timer timer;
    ResolvedTrainSetup s = resolve_train_setup(cmd, o);
    ensure_dir(o.out_dir);
    const auto idx = split_dataset(s.dataset, s.split);
    std::vector<int> pool = idx.train;
    pool.insert(pool.end(), idx.val.begin(), idx.val.end());
    CvResult cv = cross_validate(s.model, s.dataset, pool, k, s.tc, s.schema);
    export_report(cv.aggregate, o.out_dir + "/cv_report");
    for (size_t f = 0; f < cv.fold_reports.size(); ++f)
        export_report(cv.fold_reports[f], o.out_dir + "/cv_fold" + std::to_string(f));
    RunManifest m = start_manifest("cv", o);
    m.effective_config = s.effective;
    m.effective_config["k"] = k;
    m.artifacts = {o.out_dir + "/cv_report.json", o.out_dir + "/cv_report.csv"};
    m.wall_time_s = timer.seconds();
    write_manifest(m, o.out_dir);
    std::cout << "cv: " << k << " folds, mean MAPE " << fmt_double(cv.aggregate.overall.mape * 100.0)
              << "%\n";
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data, const std::string& out_dir) {
    Timer timer;
    ModelBundle b = load_model_bundle(model_path);
    ensure_dir(out_dir);
    Dataset ds = load_any_dataset(data, b.transforms.schema, b.suite, "", 3.0, IncompletePolicy::Drop);
    EvalReport rep = evaluate(b.params, ds, b.transforms);
    export_report(rep, out_dir + "/eval_report");
    RunManifest m;
    m.command = "evaluate";
    m.add_input(model_path);
    m.add_input(data);
    m.artifacts = {out_dir + "/eval_report.json", out_dir + "/eval_report.csv"};
    m.wall_time_s = timer.seconds();
    write_manifest(m, out_dir);
    std::cout << "evaluate: " << ds.size() << " records, MAPE "
              << fmt_double(rep.overall.mape * 100.0) << "%\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::string& out) {
    Timer timer;
    ModelBundle b = load_model_bundle(model_path);
    Dataset ds = load_any_dataset(data, b.transforms.schema, b.suite, "", 3.0, IncompletePolicy::Drop);
    std::vector<double> pred = predict(b.params, ds, b.transforms);
    CsvTable t;
    t.header = {"record"};
    for (const auto& bench : b.suite.benchmarks) t.header.push_back(bench);
    const int md = b.suite.output_dim();
    for (int r = 0; r < ds.size(); ++r) {
        std::vector<std::string> row = {std::to_string(r)};
        for (int j = 0; j < md; ++j) row.push_back(fmt_double(pred[static_cast<size_t>(r * md + j)]));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, out);
    RunManifest m;
    m.command = "predict";
    m.add_input(model_path);
    m.add_input(data);
    m.artifacts = {out};
    m.wall_time_s = timer.seconds();
    const std::string dir = std::filesystem::path(out).parent_path().string();
    write_manifest(m, dir.empty() ? "." : dir);
    std::cout << "predict: " << ds.size() << " records -> " << out << "\n";
    return 0;
}

int cmd_explain(const std::string& model_path, const std::string& data, int sample, int head, int layer,
                bool row_mean, const std::string& out_dir) {
    Timer timer;
    ModelBundle b = load_model_bundle(model_path);
    ensure_dir(out_dir);
    Dataset ds = load_any_dataset(data, b.transforms.schema, b.suite, "", 3.0, IncompletePolicy::Drop);
    EncodedBatch batch = encode_batch(ds, all_indices(ds), b.transforms);
    AttentionTrace trace;
    forward(nullptr, b.params, batch, /*training=*/false, &trace);
    ImportanceReport rep = build_importance_report(
        trace, b.transforms, b.suite.name, layer, head, sample,
        row_mean ? ImportanceReduction::RowMean : ImportanceReduction::ColumnMean);
    auto written = export_importance(rep, out_dir);
    RunManifest m;
    m.command = "explain";
    m.add_input(model_path);
    m.add_input(data);
    m.artifacts = written;
    m.wall_time_s = timer.seconds();
    write_manifest(m, out_dir);
    std::cout << "explain: wrote " << written.size() << " files to " << out_dir << "\n";
    return 0;
}

int cmd_synth(const CLI::App* cmd, const std::string& config_path, int n, std::string suite_name,
              double sigma, std::string family_name, uint64_t seed, double target_mape,
              const std::string& schema_path, const std::string& out, std::string consolidated_out,
              bool omit_derived) {
    Timer timer;
    std::optional<nlohmann::json> cfg;
    if (!config_path.empty()) cfg = load_json_file(config_path);
    const nlohmann::json* c = cfg ? &*cfg : nullptr;
    layer_option(cmd, "--n", c, "n_records", n);
    layer_option(cmd, "--suite", c, "suite", suite_name);
    layer_option(cmd, "--sigma", c, "noise_sigma", sigma);
    layer_option(cmd, "--family", c, "family", family_name);
    layer_option(cmd, "--seed", c, "seed", seed);
    layer_option(cmd, "--target-linear-mape", c, "target_linear_mape", target_mape);

    SynthConfig sc;
    sc.n_records = n;
    sc.suite = suite_name;
    sc.noise_sigma = sigma;
    sc.family = family_from_string(family_name);
    sc.seed = resolve_seed(seed);
    sc.target_linear_mape = target_mape;

    const FeatureSchema schema = schema_from_opt(schema_path);
    SynthResult res = generate(sc, schema);
    write_csv(raw_runs_csv(res, schema, !omit_derived), out);
    const std::string stem = out.substr(0, out.rfind('.') == std::string::npos ? out.size() : out.rfind('.'));
    const std::string truth_path = stem + "_truth.json";
    {
        std::ofstream tout(truth_path);
        if (!tout) throw IoError("cannot write " + truth_path);
        tout << truth_to_json(res.truth).dump(2) << "\n";
    }
    RunManifest m;
    m.command = "synth";
    m.seed = sc.seed;
    if (!config_path.empty()) {
        m.config_path = config_path;
        m.config_hash = hash_file(config_path);
    }
    m.artifacts = {out, truth_path};
    if (!consolidated_out.empty()) {
        write_csv(dataset_to_csv(res.dataset, schema), consolidated_out);
        m.artifacts.push_back(consolidated_out);
    }
    m.effective_config = {{"n_records", sc.n_records},
                          {"suite", sc.suite},
                          {"noise_sigma", sc.noise_sigma},
                          {"family", to_string(sc.family)},
                          {"seed", sc.seed},
                          {"target_linear_mape", sc.target_linear_mape}};
    m.wall_time_s = timer.seconds();
    const std::string dir = std::filesystem::path(out).parent_path().string();
    write_manifest(m, dir.empty() ? "." : dir);
    std::cout << "synth: " << res.dataset.size() << " configurations -> " << out;
    if (sc.family == SynthFamily::NonlinearInteraction)
        std::cout << " (calibrated scale " << fmt_double(res.calibration.scale)
                  << ", linear-fit MAPE " << fmt_double(res.calibration.linear_fit_mape * 100.0) << "%)";
    std::cout << "\n";
    return 0;
}

int cmd_ablate(const CLI::App* cmd, CommonTrainOpts& o, const std::string& arm_name, int n_seeds) {
    Timer timer;
    ResolvedTrainSetup s = resolve_train_setup(cmd, o);
    ensure_dir(o.out_dir);
    CsvTable table;
    table.header = {"seed", "arm", "mae", "mse", "mape"};
    for (int i = 0; i < n_seeds; ++i) {
        NCPPConfig base = s.model;
        base.seed = s.model.seed + static_cast<uint64_t>(i);
        TrainConfig tc = s.tc;
        tc.seed = s.tc.seed + static_cast<uint64_t>(i);
        SplitSpec split = s.split;
        split.seed = s.split.seed + static_cast<uint64_t>(i);
        if (arm_name.empty()) {
            AblationResult res = run_ablation_suite(base, s.dataset, split, tc, s.schema);
            for (const auto& r : res.rows)
                table.rows.push_back({std::to_string(base.seed), r.arm, fmt_double(r.mae),
                                      fmt_double(r.mse), fmt_double(r.mape)});
        } else {
            AblationArm arm = find_ablation_arm(arm_name);
            NCPPConfig cfg = base;
            arm.apply(cfg);
            const auto idx = split_dataset(s.dataset, split);
            Dataset tr = subset(s.dataset, idx.train), va = subset(s.dataset, idx.val),
                    te = subset(s.dataset, idx.test);
            Transforms tf = fit_transforms(tr, s.schema);
            auto res = train(init_model(cfg, s.schema), tr, va, tf, tc);
            EvalReport rep = evaluate(res.best_params, te, tf);
            export_report(rep, o.out_dir + "/ablation_" + arm_name + "_seed" + std::to_string(base.seed));
            table.rows.push_back({std::to_string(base.seed), arm.name, fmt_double(rep.overall.mae),
                                  fmt_double(rep.overall.mse), fmt_double(rep.overall.mape)});
        }
    }
    const std::string out = o.out_dir + "/ablation.csv";
    write_csv(table, out);
    RunManifest m = start_manifest("ablate", o);
    m.effective_config = s.effective;
    m.effective_config["seeds"] = n_seeds;
    if (!arm_name.empty()) m.effective_config["arm"] = arm_name;
    m.artifacts = {out};
    m.wall_time_s = timer.seconds();
    write_manifest(m, o.out_dir);
    std::cout << "ablate: wrote " << table.rows.size() << " rows to " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grouped-attention CPU benchmark score predictor"};
    app.require_subcommand(1);
    int exit_code = 0;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "clean and consolidate raw benchmark runs");
    struct {
        std::string data, suite, schema, dimm, out;
        double z = 3.0;
        bool mask = false;
    } ing;
    ingest->add_option("--data", ing.data)->required();
    ingest->add_option("--suite", ing.suite)->required();
    ingest->add_option("--schema", ing.schema);
    ingest->add_option("--dimm-lookup", ing.dimm);
    ingest->add_option("--z-threshold", ing.z);
    ingest->add_flag("--mask-incomplete", ing.mask);
    ingest->add_option("--out", ing.out)->required();
    ingest->callback([&] {
        exit_code = cmd_ingest(ing.data, ing.suite, ing.schema, ing.dimm, ing.z, ing.mask, ing.out);
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model and evaluate on the test split");
    CommonTrainOpts tro;
    add_common_train_flags(train_cmd, tro);
    train_cmd->callback([&] { exit_code = cmd_train(train_cmd, tro); });

    // cv
    auto* cv_cmd = app.add_subcommand("cv", "k-fold cross-validation over the train+val pool");
    CommonTrainOpts cvo;
    int cv_k = 5;
    add_common_train_flags(cv_cmd, cvo);
    cv_cmd->add_option("--k", cv_k, "number of folds");
    cv_cmd->callback([&] { exit_code = cmd_cv(cv_cmd, cvo, cv_k); });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a saved model on a dataset");
    struct {
        std::string model, data, out_dir = ".";
    } evo;
    eval_cmd->add_option("--model", evo.model)->required();
    eval_cmd->add_option("--data", evo.data)->required();
    eval_cmd->add_option("--out-dir", evo.out_dir);
    eval_cmd->callback([&] { exit_code = cmd_evaluate(evo.model, evo.data, evo.out_dir); });

    // predict
    auto* pred_cmd = app.add_subcommand("predict", "write per-benchmark predictions");
    struct {
        std::string model, data, out;
    } pro;
    pred_cmd->add_option("--model", pro.model)->required();
    pred_cmd->add_option("--data", pro.data)->required();
    pred_cmd->add_option("--out", pro.out)->required();
    pred_cmd->callback([&] { exit_code = cmd_predict(pro.model, pro.data, pro.out); });

    // explain
    auto* exp_cmd = app.add_subcommand("explain", "export attention weights and feature importance");
    struct {
        std::string model, data, out_dir = ".";
        int sample = -1, head = 0, layer = 0;
        bool row_mean = false;
    } exo;
    exp_cmd->add_option("--model", exo.model)->required();
    exp_cmd->add_option("--data", exo.data)->required();
    exp_cmd->add_option("--sample", exo.sample, "record index (-1 = batch mean)");
    exp_cmd->add_option("--head", exo.head);
    exp_cmd->add_option("--layer", exo.layer);
    exp_cmd->add_flag("--row-mean", exo.row_mean, "aggregate attention given instead of received");
    exp_cmd->add_option("--out-dir", exo.out_dir);
    exp_cmd->callback([&] {
        exit_code = cmd_explain(exo.model, exo.data, exo.sample, exo.head, exo.layer, exo.row_mean,
                                exo.out_dir);
    });

    // synth
    auto* syn_cmd = app.add_subcommand("synth", "generate a synthetic dataset with a planted oracle");
    struct {
        std::string config, suite = "SPECrate2017_fp_base", family = "linear", schema, out, consolidated;
        int n = 256;
        double sigma = 0.0, target = 0.16;
        uint64_t seed = 42;
        bool omit_derived = false;
    } syo;
    syn_cmd->add_option("--config", syo.config, "JSON synth config");
    syn_cmd->add_option("--n", syo.n, "number of configurations");
    syn_cmd->add_option("--suite", syo.suite);
    syn_cmd->add_option("--sigma", syo.sigma, "log-scale noise sigma");
    syn_cmd->add_option("--family", syo.family, "linear | nonlinear-interaction");
    syn_cmd->add_option("--seed", syo.seed);
    syn_cmd->add_option("--target-linear-mape", syo.target);
    syn_cmd->add_option("--schema", syo.schema);
    syn_cmd->add_option("--out", syo.out, "raw run-level CSV path")->required();
    syn_cmd->add_option("--consolidated", syo.consolidated, "also write a consolidated CSV here");
    syn_cmd->add_flag("--omit-dimm-derived", syo.omit_derived,
                      "leave module-derived memory columns to lookup expansion");
    syn_cmd->callback([&] {
        exit_code = cmd_synth(syn_cmd, syo.config, syo.n, syo.suite, syo.sigma, syo.family, syo.seed,
                              syo.target, syo.schema, syo.out, syo.consolidated, syo.omit_derived);
    });

    // ablate
    auto* abl_cmd = app.add_subcommand("ablate", "run attention ablation arms");
    CommonTrainOpts abo;
    std::string arm;
    int n_seeds = 1;
    add_common_train_flags(abl_cmd, abo);
    abl_cmd->add_option("--arm", arm, "single arm to run (default: all six)");
    abl_cmd->add_option("--seeds", n_seeds, "repeat with consecutive seeds");
    abl_cmd->callback([&] { exit_code = cmd_ablate(abl_cmd, abo, arm, n_seeds); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ncpp::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ncpp::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const ncpp::ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ncpp::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_code;
}
