#pragma once
// Linear-family baselines (LR, Ridge, Lasso, Elastic Net), fitted
// independently per output column. Categorical features enter as
// bag-of-token count vectors so the design matrix is fixed-width.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ncpp/encode.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/ingest.hpp"

namespace ncpp {

struct RegSpec {
    double l1 = 0.0, l2 = 0.0;
};

struct LinearModel {
    int n_features = 0, out_dim = 0;
    std::vector<double> weights;   // [n_features x out_dim], row-major
    std::vector<double> intercept; // [out_dim]
    RegSpec reg;
    bool converged = true;
    std::vector<std::string> feature_names;
};

struct DesignMatrix {
    int rows = 0, cols = 0;
    std::vector<double> x; // row-major
    std::vector<std::string> names;
};

// Numeric features standardized by the fitted transforms, then per
// categorical feature one count column per vocab token (plus an OOV count
// column).
inline DesignMatrix baseline_design(const Dataset& ds, const Transforms& tf) {
    DesignMatrix d;
    d.rows = ds.size();
    std::vector<int> num_idx;
    for (const auto& grp : {tf.partition.memory, tf.partition.cpu, tf.partition.other})
        for (int i : grp) num_idx.push_back(i);
    for (int i : num_idx) d.names.push_back(tf.schema.features[static_cast<size_t>(i)].name);
    // Per char feature: map token id -> design column.
    std::vector<std::map<int, int>> id_to_col(tf.vocabs.size());
    for (size_t f = 0; f < tf.vocabs.size(); ++f) {
        const std::string fname =
            tf.schema.features[static_cast<size_t>(tf.partition.chars[f])].name;
        std::vector<std::pair<int, std::string>> ordered;
        for (const auto& [tok, id] : tf.vocabs[f].token_to_id) ordered.emplace_back(id, tok);
        std::sort(ordered.begin(), ordered.end());
        for (const auto& [id, tok] : ordered) {
            id_to_col[f][id] = static_cast<int>(d.names.size());
            d.names.push_back(fname + "::" + tok);
        }
        id_to_col[f][kOovId] = static_cast<int>(d.names.size());
        d.names.push_back(fname + "::<oov>");
    }
    d.cols = static_cast<int>(d.names.size());
    d.x.assign(static_cast<size_t>(d.rows) * d.cols, 0.0);
    for (int r = 0; r < d.rows; ++r) {
        const auto& rec = ds.records[static_cast<size_t>(r)];
        int c = 0;
        for (int i : num_idx)
            d.x[static_cast<size_t>(r) * d.cols + c++] =
                apply_normalizer(tf, i, record_numeric(rec, i, tf.schema));
        for (size_t f = 0; f < tf.vocabs.size(); ++f) {
            const int fi = tf.partition.chars[f];
            for (const auto& tok : tokenize_value(rec.values[static_cast<size_t>(fi)]))
                d.x[static_cast<size_t>(r) * d.cols + id_to_col[f].at(tf.vocabs[f].id_of(tok))] += 1.0;
        }
    }
    return d;
}

inline std::vector<double> label_matrix(const Dataset& ds) {
    const int m = ds.suite.output_dim();
    std::vector<double> y(static_cast<size_t>(ds.size()) * m);
    for (int r = 0; r < ds.size(); ++r)
        for (int j = 0; j < m; ++j)
            y[static_cast<size_t>(r) * m + j] = ds.records[static_cast<size_t>(r)].labels[static_cast<size_t>(j)];
    return y;
}

namespace detail {

// Solves A w = b for symmetric positive semidefinite A by Cholesky; falls
// back to a tiny ridge jitter when A is singular (pseudo-inverse stand-in).
inline std::vector<double> solve_spd(std::vector<double> a, std::vector<double> b, int n) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> L(a);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) {
            for (int j = 0; j <= i; ++j) {
                double s = L[static_cast<size_t>(i) * n + j];
                for (int k = 0; k < j; ++k)
                    s -= L[static_cast<size_t>(i) * n + k] * L[static_cast<size_t>(j) * n + k];
                if (i == j) {
                    if (s <= 0.0) {
                        ok = false;
                        break;
                    }
                    L[static_cast<size_t>(i) * n + j] = std::sqrt(s);
                } else {
                    L[static_cast<size_t>(i) * n + j] = s / L[static_cast<size_t>(j) * n + j];
                }
            }
        }
        if (ok) {
            std::vector<double> y(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double s = b[static_cast<size_t>(i)];
                for (int k = 0; k < i; ++k) s -= L[static_cast<size_t>(i) * n + k] * y[static_cast<size_t>(k)];
                y[static_cast<size_t>(i)] = s / L[static_cast<size_t>(i) * n + i];
            }
            std::vector<double> w(static_cast<size_t>(n));
            for (int i = n - 1; i >= 0; --i) {
                double s = y[static_cast<size_t>(i)];
                for (int k = i + 1; k < n; ++k) s -= L[static_cast<size_t>(k) * n + i] * w[static_cast<size_t>(k)];
                w[static_cast<size_t>(i)] = s / L[static_cast<size_t>(i) * n + i];
            }
            return w;
        }
        double trace = 0.0;
        for (int i = 0; i < n; ++i) trace += a[static_cast<size_t>(i) * n + i];
        const double jitter = std::max(trace / n, 1.0) * 1e-10;
        for (int i = 0; i < n; ++i) a[static_cast<size_t>(i) * n + i] += jitter;
    }
    throw NumericError("linear solve failed even with ridge jitter");
}

inline double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace detail

// lambda1 == lambda2 == 0: least squares (normal equations, jittered
// Cholesky fallback). lambda1 == 0: ridge closed form on centered data,
// intercept unpenalized. lambda1 > 0: cyclic coordinate descent with
// soft-thresholding, objective (1/2n)||y-Xw-b||^2 + l1|w| + (l2/2)|w|^2.
inline LinearModel fit_linear(const DesignMatrix& X, const std::vector<double>& Y, int out_dim,
                              const RegSpec& reg, double tol = 1e-8, int max_sweeps = 10000) {
    const int n = X.rows, p = X.cols;
    if (n <= 0 || static_cast<int>(Y.size()) != n * out_dim)
        throw ShapeError("fit_linear: label matrix must be rows x out_dim");
    LinearModel model;
    model.n_features = p;
    model.out_dim = out_dim;
    model.reg = reg;
    model.feature_names = X.names;
    model.weights.assign(static_cast<size_t>(p) * out_dim, 0.0);
    model.intercept.assign(static_cast<size_t>(out_dim), 0.0);

    std::vector<double> xmean(static_cast<size_t>(p), 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < p; ++c) xmean[static_cast<size_t>(c)] += X.x[static_cast<size_t>(r) * p + c];
    for (auto& v : xmean) v /= n;

    if (reg.l1 == 0.0) {
        // Centered Gram matrix once for all outputs.
        std::vector<double> g(static_cast<size_t>(p) * p, 0.0);
        for (int r = 0; r < n; ++r)
            for (int i = 0; i < p; ++i) {
                const double xi = X.x[static_cast<size_t>(r) * p + i] - xmean[static_cast<size_t>(i)];
                for (int j = i; j < p; ++j)
                    g[static_cast<size_t>(i) * p + j] +=
                        xi * (X.x[static_cast<size_t>(r) * p + j] - xmean[static_cast<size_t>(j)]);
            }
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < i; ++j)
                g[static_cast<size_t>(i) * p + j] = g[static_cast<size_t>(j) * p + i];
        for (int i = 0; i < p; ++i) g[static_cast<size_t>(i) * p + i] += n * reg.l2;
        for (int j = 0; j < out_dim; ++j) {
            double ymean = 0.0;
            for (int r = 0; r < n; ++r) ymean += Y[static_cast<size_t>(r) * out_dim + j];
            ymean /= n;
            std::vector<double> rhs(static_cast<size_t>(p), 0.0);
            for (int r = 0; r < n; ++r) {
                const double yc = Y[static_cast<size_t>(r) * out_dim + j] - ymean;
                for (int c = 0; c < p; ++c)
                    rhs[static_cast<size_t>(c)] +=
                        (X.x[static_cast<size_t>(r) * p + c] - xmean[static_cast<size_t>(c)]) * yc;
            }
            auto w = detail::solve_spd(g, rhs, p);
            double b = ymean;
            for (int c = 0; c < p; ++c) {
                model.weights[static_cast<size_t>(c) * out_dim + j] = w[static_cast<size_t>(c)];
                b -= w[static_cast<size_t>(c)] * xmean[static_cast<size_t>(c)];
            }
            model.intercept[static_cast<size_t>(j)] = b;
        }
        return model;
    }

    // Coordinate descent.
    std::vector<double> znorm(static_cast<size_t>(p), 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < p; ++c) {
            const double v = X.x[static_cast<size_t>(r) * p + c];
            znorm[static_cast<size_t>(c)] += v * v;
        }
    for (auto& v : znorm) v /= n;
    for (int j = 0; j < out_dim; ++j) {
        std::vector<double> w(static_cast<size_t>(p), 0.0);
        double b = 0.0;
        for (int r = 0; r < n; ++r) b += Y[static_cast<size_t>(r) * out_dim + j];
        b /= n;
        std::vector<double> resid(static_cast<size_t>(n));
        for (int r = 0; r < n; ++r) resid[static_cast<size_t>(r)] = Y[static_cast<size_t>(r) * out_dim + j] - b;
        bool done = false;
        for (int sweep = 0; sweep < max_sweeps && !done; ++sweep) {
            double max_delta = 0.0;
            for (int c = 0; c < p; ++c) {
                if (znorm[static_cast<size_t>(c)] == 0.0) continue;
                double rho = 0.0;
                for (int r = 0; r < n; ++r)
                    rho += X.x[static_cast<size_t>(r) * p + c] * resid[static_cast<size_t>(r)];
                rho = rho / n + znorm[static_cast<size_t>(c)] * w[static_cast<size_t>(c)];
                const double w_new =
                    detail::soft_threshold(rho, reg.l1) / (znorm[static_cast<size_t>(c)] + reg.l2);
                const double dw = w_new - w[static_cast<size_t>(c)];
                if (dw != 0.0) {
                    for (int r = 0; r < n; ++r)
                        resid[static_cast<size_t>(r)] -= dw * X.x[static_cast<size_t>(r) * p + c];
                    w[static_cast<size_t>(c)] = w_new;
                }
                max_delta = std::max(max_delta, std::abs(dw));
            }
            double bsum = 0.0;
            for (double r : resid) bsum += r;
            const double db = bsum / n;
            b += db;
            for (auto& r : resid) r -= db;
            max_delta = std::max(max_delta, std::abs(db));
            done = max_delta < tol;
        }
        if (!done) model.converged = false;
        for (int c = 0; c < p; ++c) model.weights[static_cast<size_t>(c) * out_dim + j] = w[static_cast<size_t>(c)];
        model.intercept[static_cast<size_t>(j)] = b;
    }
    return model;
}

inline std::vector<double> predict_linear(const LinearModel& model, const DesignMatrix& X) {
    if (X.cols != model.n_features)
        throw ShapeError("predict_linear: expected " + std::to_string(model.n_features) +
                         " features, got " + std::to_string(X.cols));
    std::vector<double> y(static_cast<size_t>(X.rows) * model.out_dim);
    for (int r = 0; r < X.rows; ++r)
        for (int j = 0; j < model.out_dim; ++j) {
            double s = model.intercept[static_cast<size_t>(j)];
            for (int c = 0; c < X.cols; ++c)
                s += X.x[static_cast<size_t>(r) * X.cols + c] *
                     model.weights[static_cast<size_t>(c) * model.out_dim + j];
            y[static_cast<size_t>(r) * model.out_dim + j] = s;
        }
    return y;
}

inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline nlohmann::json linear_model_to_json(const LinearModel& m) {
    std::string joined;
    for (const auto& n : m.feature_names) joined += n + "\x1f";
    return {{"n_features", m.n_features},
            {"out_dim", m.out_dim},
            {"weights", m.weights},
            {"intercept", m.intercept},
            {"l1", m.reg.l1},
            {"l2", m.reg.l2},
            {"converged", m.converged},
            {"feature_order_hash", fnv1a64(joined)},
            {"feature_names", m.feature_names}};
}

} // namespace ncpp
