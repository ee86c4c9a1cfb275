#pragma once
// Splits, 5-fold cross-validation, and the optimization loop tying
// encode -> model -> loss -> Adam together. Single-threaded and fully
// deterministic given (seed, data, config).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ncpp/encode.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/ingest.hpp"
#include "ncpp/metrics.hpp"
#include "ncpp/model.hpp"
#include "ncpp/tensor.hpp"

namespace ncpp {

struct SplitSpec {
    double train = 0.6, val = 0.2, test = 0.2;
    uint64_t seed = 42;

    void validate() const {
        if (!(train > 0 && val > 0 && test > 0))
            throw DataError("split: all fractions must be positive");
        if (std::abs(train + val + test - 1.0) > 1e-9)
            throw DataError("split: fractions must sum to 1");
    }
};

struct SplitIndices {
    std::vector<int> train, val, test;
};

// Seeded shuffle, then: test = floor(f_test * n), val = floor of the val
// share of the remainder, train = rest. This floor rule reproduces the
// published per-suite counts (e.g. 816/204/254 out of 1274 at 64/16/20).
inline SplitIndices split_indices(int n, const SplitSpec& spec) {
    spec.validate();
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(spec.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    // tiny epsilon so ratios that are exact in real arithmetic (e.g.
    // 0.16/0.80 * 1020 = 204) are not floored one short by rounding noise
    const int n_test = static_cast<int>(std::floor(spec.test * n + 1e-9));
    const int rest = n - n_test;
    const int n_val = static_cast<int>(std::floor(spec.val / (spec.train + spec.val) * rest + 1e-9));
    const int n_train = rest - n_val;
    if (n_train <= 0 || n_val <= 0 || n_test <= 0)
        throw DataError("split: a partition would be empty at n=" + std::to_string(n));
    SplitIndices out;
    out.train.assign(idx.begin(), idx.begin() + n_train);
    out.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    out.test.assign(idx.begin() + n_train + n_val, idx.end());
    return out;
}

inline Dataset subset(const Dataset& ds, const std::vector<int>& indices) {
    Dataset out;
    out.suite = ds.suite;
    for (int i : indices) out.records.push_back(ds.records.at(static_cast<size_t>(i)));
    return out;
}

inline SplitIndices split_dataset(const Dataset& ds, const SplitSpec& spec) {
    return split_indices(ds.size(), spec);
}

// k folds of size differing by at most 1; every index validates exactly once.
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold(int n, int k, uint64_t seed) {
    if (k < 2) throw DataError("kfold: k must be >= 2");
    if (n < k) throw DataError("kfold: fewer records than folds");
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::pair<std::vector<int>, std::vector<int>>> folds;
    const int base = n / k, extra = n % k;
    int pos = 0;
    for (int f = 0; f < k; ++f) {
        const int len = base + (f < extra ? 1 : 0);
        std::vector<int> val(idx.begin() + pos, idx.begin() + pos + len);
        std::vector<int> train;
        train.insert(train.end(), idx.begin(), idx.begin() + pos);
        train.insert(train.end(), idx.begin() + pos + len, idx.end());
        folds.emplace_back(std::move(train), std::move(val));
        pos += len;
    }
    return folds;
}

struct TrainConfig {
    int epochs = 1000;
    int batch_size = 64;
    LrSchedule lr;
    uint64_t seed = 42;
    // Optional early exit once train MAPE drops below this (<= 0 disables);
    // checked every `check_every` epochs.
    double stop_train_mape = 0.0;
    int check_every = 25;
};

struct TrainHistory {
    std::vector<double> train_loss, val_loss, learning_rate, wall_time_s;
    int epochs_run = 0;
};

struct TrainResult {
    NCPPParams params;      // final
    NCPPParams best_params; // lowest validation loss
    double best_val_loss = 0.0;
    int best_epoch = -1;
    TrainHistory history;
};

namespace detail {

inline double eval_loss(NCPPParams& params, const EncodedBatch& batch, double delta) {
    auto pred = forward(nullptr, params, batch, /*training=*/false);
    auto target = Tensor::from(pred->shape, batch.labels);
    return huber_loss(nullptr, pred, target, delta)->data[0];
}

inline EncodedBatch batch_slice(const EncodedBatch& full, const std::vector<int>& rows) {
    EncodedBatch b;
    b.batch = static_cast<int>(rows.size());
    b.memory_len = full.memory_len;
    b.cpu_len = full.cpu_len;
    b.other_len = full.other_len;
    b.n_char = full.n_char;
    b.t_max = full.t_max;
    b.out_dim = full.out_dim;
    auto take = [&](const std::vector<double>& src, std::vector<double>& dst, int width) {
        dst.resize(static_cast<size_t>(b.batch) * width);
        for (int r = 0; r < b.batch; ++r)
            std::copy_n(src.data() + static_cast<size_t>(rows[static_cast<size_t>(r)]) * width, width,
                        dst.data() + static_cast<size_t>(r) * width);
    };
    take(full.memory, b.memory, full.memory_len);
    take(full.cpu, b.cpu, full.cpu_len);
    take(full.other, b.other, full.other_len);
    take(full.labels, b.labels, full.out_dim);
    const int cw = full.n_char * full.t_max;
    b.char_ids.resize(static_cast<size_t>(b.batch) * cw);
    b.char_mask.resize(static_cast<size_t>(b.batch) * cw);
    for (int r = 0; r < b.batch; ++r) {
        std::copy_n(full.char_ids.data() + static_cast<size_t>(rows[static_cast<size_t>(r)]) * cw, cw,
                    b.char_ids.data() + static_cast<size_t>(r) * cw);
        std::copy_n(full.char_mask.data() + static_cast<size_t>(rows[static_cast<size_t>(r)]) * cw, cw,
                    b.char_mask.data() + static_cast<size_t>(r) * cw);
    }
    return b;
}

} // namespace detail

// Mini-batch Huber/Adam loop with per-global-step exponential lr decay.
// Head bias starts at the per-output training-label mean.
inline TrainResult train(NCPPParams params, const Dataset& train_ds, const Dataset& val_ds,
                         const Transforms& tf, const TrainConfig& cfg) {
    if (train_ds.records.empty()) throw DataError("train: empty training set");
    const double delta = params.config.huber_delta;
    EncodedBatch train_full = encode_batch(train_ds, all_indices(train_ds), tf);
    EncodedBatch val_full;
    const bool has_val = !val_ds.records.empty();
    if (has_val) val_full = encode_batch(val_ds, all_indices(val_ds), tf);

    // Head bias init to the training-label mean per output.
    for (int j = 0; j < train_full.out_dim; ++j) {
        double mu = 0.0;
        for (int r = 0; r < train_full.batch; ++r)
            mu += train_full.labels[static_cast<size_t>(r * train_full.out_dim + j)];
        params.head_b->data[static_cast<size_t>(j)] = mu / train_full.batch;
    }

    auto trainables = params.trainable();
    AdamState adam;
    adam.init(trainables);

    TrainResult res;
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<int> order(static_cast<size_t>(train_full.batch));
    std::iota(order.begin(), order.end(), 0);
    int64_t global_step = 0;
    const auto t0 = std::chrono::steady_clock::now();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        int n_batches = 0;
        double lr_last = cfg.lr.at(global_step);
        for (int start = 0; start < train_full.batch; start += cfg.batch_size) {
            const int len = std::min(cfg.batch_size, train_full.batch - start);
            std::vector<int> rows(order.begin() + start, order.begin() + start + len);
            EncodedBatch mb = detail::batch_slice(train_full, rows);
            Tape tape;
            TensorPtr loss;
            try {
                auto pred = forward(&tape, params, mb, /*training=*/true);
                auto target = Tensor::from(pred->shape, mb.labels);
                loss = huber_loss(&tape, pred, target, delta);
            } catch (const NumericError& e) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(n_batches) + ": " + e.what());
            }
            params.zero_grads();
            tape.backward(loss);
            lr_last = cfg.lr.at(global_step);
            adam_step(trainables, adam, lr_last);
            // Pad embedding row stays zero.
            for (int j = 0; j < params.config.embed_dim; ++j) params.embedding->data[static_cast<size_t>(j)] = 0.0;
            ++global_step;
            epoch_loss += loss->data[0];
            ++n_batches;
        }
        res.history.train_loss.push_back(epoch_loss / n_batches);
        res.history.learning_rate.push_back(lr_last);
        double vloss = has_val ? detail::eval_loss(params, val_full, delta)
                               : res.history.train_loss.back();
        res.history.val_loss.push_back(vloss);
        res.history.wall_time_s.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        res.history.epochs_run = epoch + 1;
        if (res.best_epoch < 0 || vloss < res.best_val_loss) {
            res.best_val_loss = vloss;
            res.best_epoch = epoch;
            res.best_params = clone_params(params);
        }
        if (cfg.stop_train_mape > 0.0 && (epoch + 1) % cfg.check_every == 0) {
            auto pred = forward(nullptr, params, train_full, /*training=*/false);
            auto rep = compute_metrics(pred->data, train_full.labels, train_ds.suite);
            if (rep.overall.mape < cfg.stop_train_mape) break;
        }
    }
    res.params = std::move(params);
    return res;
}

inline std::vector<double> predict(NCPPParams& params, const Dataset& ds, const Transforms& tf) {
    EncodedBatch b = encode_batch(ds, all_indices(ds), tf);
    return forward(nullptr, params, b, /*training=*/false)->data;
}

inline EvalReport evaluate(NCPPParams& params, const Dataset& ds, const Transforms& tf) {
    EncodedBatch b = encode_batch(ds, all_indices(ds), tf);
    auto pred = forward(nullptr, params, b, /*training=*/false);
    return compute_metrics(pred->data, b.labels, ds.suite);
}

inline CsvTable history_to_csv(const TrainHistory& h) {
    CsvTable t;
    t.header = {"epoch", "train_loss", "val_loss", "learning_rate", "wall_time_s"};
    for (int e = 0; e < h.epochs_run; ++e)
        t.rows.push_back({std::to_string(e), fmt_double(h.train_loss[static_cast<size_t>(e)]),
                          fmt_double(h.val_loss[static_cast<size_t>(e)]),
                          fmt_double(h.learning_rate[static_cast<size_t>(e)]),
                          fmt_double(h.wall_time_s[static_cast<size_t>(e)])});
    return t;
}

// 5-fold CV over the pooled train+val indices; the test split stays
// untouched. Fold f trains with seed cfg.seed + f.
struct CvResult {
    std::vector<EvalReport> fold_reports;
    EvalReport aggregate;
};

inline CvResult cross_validate(const NCPPConfig& model_cfg, const Dataset& ds,
                               const std::vector<int>& pool, int k, const TrainConfig& cfg,
                               const FeatureSchema& schema) {
    CvResult out;
    auto folds = kfold(static_cast<int>(pool.size()), k, cfg.seed);
    for (size_t f = 0; f < folds.size(); ++f) {
        std::vector<int> tr_idx, va_idx;
        for (int i : folds[f].first) tr_idx.push_back(pool[static_cast<size_t>(i)]);
        for (int i : folds[f].second) va_idx.push_back(pool[static_cast<size_t>(i)]);
        Dataset tr = subset(ds, tr_idx), va = subset(ds, va_idx);
        Transforms tf = fit_transforms(tr, schema);
        NCPPConfig mc = model_cfg;
        mc.seed = model_cfg.seed + f;
        TrainConfig tc = cfg;
        tc.seed = cfg.seed + f;
        auto res = train(init_model(mc, schema), tr, va, tf, tc);
        out.fold_reports.push_back(evaluate(res.best_params, va, tf));
    }
    out.aggregate = aggregate_cv(out.fold_reports);
    return out;
}

} // namespace ncpp
