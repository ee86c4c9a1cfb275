#pragma once
// Minimal deterministic reverse-mode autodiff engine. Tensors are dense
// row-major float64 buffers; a Tape records backward closures in forward
// order and replays them in reverse.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ncpp/errors.hpp"

namespace ncpp {

using Shape = std::vector<int>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

inline int shape_numel(const Shape& s) {
    int n = 1;
    for (int d : s) n *= d;
    return n;
}

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

class Tensor {
public:
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // non-empty iff requires_grad
    bool requires_grad = false;

    static TensorPtr create(Shape s, bool rg = false) {
        auto t = std::make_shared<Tensor>();
        t->shape = std::move(s);
        for (int d : t->shape)
            if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(t->shape));
        t->data.assign(shape_numel(t->shape), 0.0);
        t->requires_grad = rg;
        if (rg) t->grad.assign(t->data.size(), 0.0);
        return t;
    }

    static TensorPtr from(Shape s, std::vector<double> vals, bool rg = false) {
        auto t = create(std::move(s), rg);
        if (vals.size() != t->data.size())
            throw ShapeError("value count " + std::to_string(vals.size()) +
                             " does not match shape " + shape_str(t->shape));
        t->data = std::move(vals);
        return t;
    }

    static TensorPtr scalar(double v, bool rg = false) { return from({1}, {v}, rg); }

    int numel() const { return static_cast<int>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }

    void zero_grad() {
        std::fill(grad.begin(), grad.end(), 0.0);
    }
};

// Marks t as gradient-carrying and allocates the buffer.
inline void make_grad(const TensorPtr& t) {
    if (!t->requires_grad) {
        t->requires_grad = true;
        t->grad.assign(t->data.size(), 0.0);
    }
}

class Tape {
public:
    void record(std::function<void()> fn) { ops_.push_back(std::move(fn)); }

    // Seeds loss.grad with 1 and replays every recorded op once in reverse.
    // Repeated calls without zeroing gradients accumulate.
    void backward(const TensorPtr& loss) {
        if (loss->numel() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_str(loss->shape));
        if (!loss->requires_grad) throw ShapeError("backward on a tensor detached from the tape");
        loss->grad[0] += 1.0;
        for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    }

    void clear() { ops_.clear(); }
    size_t size() const { return ops_.size(); }

private:
    std::vector<std::function<void()>> ops_;
};

namespace detail {

inline void check_finite(const char* op, const TensorPtr& t) {
    for (double v : t->data)
        if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
}

inline bool want_grad(Tape* tape, std::initializer_list<TensorPtr> ins) {
    if (!tape) return false;
    for (const auto& t : ins)
        if (t->requires_grad) return true;
    return false;
}

} // namespace detail

// ---- elementwise / structural ops ------------------------------------------

inline TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw ShapeError("add: shapes " + shape_str(a->shape) + " vs " + shape_str(b->shape));
    bool rg = detail::want_grad(tape, {a, b});
    auto out = Tensor::create(a->shape, rg);
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] + b->data[i];
    detail::check_finite("add", out);
    if (rg) tape->record([a, b, out] {
        for (int i = 0; i < out->numel(); ++i) {
            if (a->requires_grad) a->grad[i] += out->grad[i];
            if (b->requires_grad) b->grad[i] += out->grad[i];
        }
    });
    return out;
}

inline TensorPtr sub(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw ShapeError("sub: shapes " + shape_str(a->shape) + " vs " + shape_str(b->shape));
    bool rg = detail::want_grad(tape, {a, b});
    auto out = Tensor::create(a->shape, rg);
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] - b->data[i];
    detail::check_finite("sub", out);
    if (rg) tape->record([a, b, out] {
        for (int i = 0; i < out->numel(); ++i) {
            if (a->requires_grad) a->grad[i] += out->grad[i];
            if (b->requires_grad) b->grad[i] -= out->grad[i];
        }
    });
    return out;
}

inline TensorPtr mul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw ShapeError("mul: shapes " + shape_str(a->shape) + " vs " + shape_str(b->shape));
    bool rg = detail::want_grad(tape, {a, b});
    auto out = Tensor::create(a->shape, rg);
    for (int i = 0; i < out->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
    detail::check_finite("mul", out);
    if (rg) tape->record([a, b, out] {
        for (int i = 0; i < out->numel(); ++i) {
            if (a->requires_grad) a->grad[i] += out->grad[i] * b->data[i];
            if (b->requires_grad) b->grad[i] += out->grad[i] * a->data[i];
        }
    });
    return out;
}

inline TensorPtr scale(Tape* tape, const TensorPtr& x, double c) {
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create(x->shape, rg);
    for (int i = 0; i < out->numel(); ++i) out->data[i] = x->data[i] * c;
    detail::check_finite("scale", out);
    if (rg) tape->record([x, out, c] {
        for (int i = 0; i < out->numel(); ++i) x->grad[i] += out->grad[i] * c;
    });
    return out;
}

inline TensorPtr relu(Tape* tape, const TensorPtr& x) {
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create(x->shape, rg);
    for (int i = 0; i < out->numel(); ++i) out->data[i] = x->data[i] > 0.0 ? x->data[i] : 0.0;
    if (rg) tape->record([x, out] {
        for (int i = 0; i < out->numel(); ++i)
            if (x->data[i] > 0.0) x->grad[i] += out->grad[i];
    });
    return out;
}

// Copy-reshape; numel must be preserved.
inline TensorPtr reshape(Tape* tape, const TensorPtr& x, Shape s) {
    if (shape_numel(s) != x->numel())
        throw ShapeError("reshape: " + shape_str(x->shape) + " -> " + shape_str(s) + " changes element count");
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create(std::move(s), rg);
    out->data = x->data;
    if (rg) tape->record([x, out] {
        for (int i = 0; i < out->numel(); ++i) x->grad[i] += out->grad[i];
    });
    return out;
}

inline TensorPtr sum(Tape* tape, const TensorPtr& x) {
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create({1}, rg);
    double s = 0.0;
    for (double v : x->data) s += v;
    out->data[0] = s;
    detail::check_finite("sum", out);
    if (rg) tape->record([x, out] {
        for (int i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0];
    });
    return out;
}

inline TensorPtr mean(Tape* tape, const TensorPtr& x) {
    auto s = sum(tape, x);
    return scale(tape, s, 1.0 / x->numel());
}

// ---- matrix ops ------------------------------------------------------------

inline TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->ndim() != 2 || b->ndim() != 2 || a->dim(1) != b->dim(0))
        throw ShapeError("matmul: incompatible shapes " + shape_str(a->shape) + " and " + shape_str(b->shape));
    const int m = a->dim(0), k = a->dim(1), n = b->dim(1);
    bool rg = detail::want_grad(tape, {a, b});
    auto out = Tensor::create({m, n}, rg);
    const double* A = a->data.data();
    const double* B = b->data.data();
    double* C = out->data.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            const double* brow = B + p * n;
            double* crow = C + i * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    detail::check_finite("matmul", out);
    if (rg) tape->record([a, b, out, m, k, n] {
        const double* G = out->grad.data();
        if (a->requires_grad) {
            double* GA = a->grad.data();
            const double* B = b->data.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double g = G[i * n + j];
                    for (int p = 0; p < k; ++p) GA[i * k + p] += g * B[p * n + j];
                }
        }
        if (b->requires_grad) {
            double* GB = b->grad.data();
            const double* A = a->data.data();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    const double* grow = G + i * n;
                    double* gbrow = GB + p * n;
                    for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                }
        }
    });
    return out;
}

// x: [..., d] times W: [d, k] -> [..., k]; applied over the last axis.
inline TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w) {
    if (x->ndim() < 1 || w->ndim() != 2 || x->shape.back() != w->dim(0))
        throw ShapeError("linear: shapes " + shape_str(x->shape) + " and " + shape_str(w->shape));
    Shape flat{x->numel() / x->shape.back(), x->shape.back()};
    auto x2 = reshape(tape, x, flat);
    auto y2 = matmul(tape, x2, w);
    Shape out = x->shape;
    out.back() = w->dim(1);
    return reshape(tape, y2, out);
}

// Broadcast b over the last axis of x.
inline TensorPtr add_bias(Tape* tape, const TensorPtr& x, const TensorPtr& b) {
    if (b->ndim() != 1 || b->dim(0) != x->shape.back())
        throw ShapeError("add_bias: bias " + shape_str(b->shape) + " vs input " + shape_str(x->shape));
    const int d = b->dim(0);
    const int rows = x->numel() / d;
    bool rg = detail::want_grad(tape, {x, b});
    auto out = Tensor::create(x->shape, rg);
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j) out->data[r * d + j] = x->data[r * d + j] + b->data[j];
    detail::check_finite("add_bias", out);
    if (rg) tape->record([x, b, out, rows, d] {
        for (int r = 0; r < rows; ++r)
            for (int j = 0; j < d; ++j) {
                if (x->requires_grad) x->grad[r * d + j] += out->grad[r * d + j];
                if (b->requires_grad) b->grad[j] += out->grad[r * d + j];
            }
    });
    return out;
}

// Batched matmul: [B,m,k] x [B,k,n] -> [B,m,n].
inline TensorPtr bmm(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->ndim() != 3 || b->ndim() != 3 || a->dim(0) != b->dim(0) || a->dim(2) != b->dim(1))
        throw ShapeError("bmm: incompatible shapes " + shape_str(a->shape) + " and " + shape_str(b->shape));
    const int B = a->dim(0), m = a->dim(1), k = a->dim(2), n = b->dim(2);
    bool rg = detail::want_grad(tape, {a, b});
    auto out = Tensor::create({B, m, n}, rg);
    for (int q = 0; q < B; ++q) {
        const double* A = a->data.data() + q * m * k;
        const double* Bm = b->data.data() + q * k * n;
        double* C = out->data.data() + q * m * n;
        for (int i = 0; i < m; ++i)
            for (int p = 0; p < k; ++p) {
                const double av = A[i * k + p];
                for (int j = 0; j < n; ++j) C[i * n + j] += av * Bm[p * n + j];
            }
    }
    detail::check_finite("bmm", out);
    if (rg) tape->record([a, b, out, B, m, k, n] {
        for (int q = 0; q < B; ++q) {
            const double* G = out->grad.data() + q * m * n;
            const double* A = a->data.data() + q * m * k;
            const double* Bm = b->data.data() + q * k * n;
            if (a->requires_grad) {
                double* GA = a->grad.data() + q * m * k;
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double g = G[i * n + j];
                        for (int p = 0; p < k; ++p) GA[i * k + p] += g * Bm[p * n + j];
                    }
            }
            if (b->requires_grad) {
                double* GB = b->grad.data() + q * k * n;
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const double av = A[i * k + p];
                        for (int j = 0; j < n; ++j) GB[p * n + j] += av * G[i * n + j];
                    }
            }
        }
    });
    return out;
}

// [B,m,n] -> [B,n,m]
inline TensorPtr transpose12(Tape* tape, const TensorPtr& x) {
    if (x->ndim() != 3) throw ShapeError("transpose12 expects a 3-d tensor, got " + shape_str(x->shape));
    const int B = x->dim(0), m = x->dim(1), n = x->dim(2);
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create({B, n, m}, rg);
    for (int q = 0; q < B; ++q)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                out->data[(q * n + j) * m + i] = x->data[(q * m + i) * n + j];
    if (rg) tape->record([x, out, B, m, n] {
        for (int q = 0; q < B; ++q)
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    x->grad[(q * m + i) * n + j] += out->grad[(q * n + j) * m + i];
    });
    return out;
}

// ---- softmax / normalization ----------------------------------------------

inline TensorPtr softmax(Tape* tape, const TensorPtr& x, int axis) {
    if (axis < 0) axis += x->ndim();
    if (axis < 0 || axis >= x->ndim())
        throw ShapeError("softmax: axis out of range for shape " + shape_str(x->shape));
    const int n = x->dim(axis);
    int outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x->dim(i);
    for (int i = axis + 1; i < x->ndim(); ++i) inner *= x->dim(i);
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create(x->shape, rg);
    for (int o = 0; o < outer; ++o)
        for (int in = 0; in < inner; ++in) {
            const int base = o * n * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) mx = std::max(mx, x->data[base + i * inner]);
            double z = 0.0;
            for (int i = 0; i < n; ++i) {
                const double e = std::exp(x->data[base + i * inner] - mx);
                out->data[base + i * inner] = e;
                z += e;
            }
            for (int i = 0; i < n; ++i) out->data[base + i * inner] /= z;
        }
    detail::check_finite("softmax", out);
    if (rg) tape->record([x, out, outer, inner, n] {
        for (int o = 0; o < outer; ++o)
            for (int in = 0; in < inner; ++in) {
                const int base = o * n * inner + in;
                double dot = 0.0;
                for (int i = 0; i < n; ++i)
                    dot += out->grad[base + i * inner] * out->data[base + i * inner];
                for (int i = 0; i < n; ++i)
                    x->grad[base + i * inner] +=
                        out->data[base + i * inner] * (out->grad[base + i * inner] - dot);
            }
    });
    return out;
}

// Normalizes over the last axis; gamma/beta have that axis's length.
inline TensorPtr layer_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                            const TensorPtr& beta, double eps = 1e-5) {
    const int d = x->shape.back();
    if (d == 0) throw ShapeError("layer_norm: empty last axis");
    if (gamma->numel() != d || beta->numel() != d)
        throw ShapeError("layer_norm: gamma/beta size must match last axis " + std::to_string(d));
    const int rows = x->numel() / d;
    bool rg = detail::want_grad(tape, {x, gamma, beta});
    auto out = Tensor::create(x->shape, rg);
    auto xhat = std::make_shared<std::vector<double>>(x->numel());
    auto inv_s = std::make_shared<std::vector<double>>(rows);
    for (int r = 0; r < rows; ++r) {
        const double* xr = x->data.data() + r * d;
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += xr[j];
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_s)[r] = is;
        for (int j = 0; j < d; ++j) {
            const double xh = (xr[j] - mu) * is;
            (*xhat)[r * d + j] = xh;
            out->data[r * d + j] = gamma->data[j] * xh + beta->data[j];
        }
    }
    detail::check_finite("layer_norm", out);
    if (rg) tape->record([x, gamma, beta, out, xhat, inv_s, rows, d] {
        for (int r = 0; r < rows; ++r) {
            const double* g = out->grad.data() + r * d;
            const double* xh = xhat->data() + r * d;
            double mean_gg = 0.0, mean_ggx = 0.0;
            for (int j = 0; j < d; ++j) {
                const double gg = g[j] * gamma->data[j];
                mean_gg += gg;
                mean_ggx += gg * xh[j];
            }
            mean_gg /= d;
            mean_ggx /= d;
            for (int j = 0; j < d; ++j) {
                if (gamma->requires_grad) gamma->grad[j] += g[j] * xh[j];
                if (beta->requires_grad) beta->grad[j] += g[j];
                if (x->requires_grad) {
                    const double gg = g[j] * gamma->data[j];
                    x->grad[r * d + j] += (*inv_s)[r] * (gg - mean_gg - xh[j] * mean_ggx);
                }
            }
        }
    });
    return out;
}

// ---- axis-1 structural ops for [B, n, d] sequences -------------------------

inline TensorPtr slice_axis1(Tape* tape, const TensorPtr& x, int start, int len) {
    if (x->ndim() != 3) throw ShapeError("slice_axis1 expects a 3-d tensor");
    const int B = x->dim(0), n = x->dim(1), d = x->dim(2);
    if (start < 0 || len <= 0 || start + len > n)
        throw ShapeError("slice_axis1: range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") out of " + std::to_string(n));
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create({B, len, d}, rg);
    for (int q = 0; q < B; ++q)
        for (int i = 0; i < len; ++i)
            std::copy_n(x->data.data() + ((q * n) + start + i) * d, d,
                        out->data.data() + ((q * len) + i) * d);
    if (rg) tape->record([x, out, B, n, d, start, len] {
        for (int q = 0; q < B; ++q)
            for (int i = 0; i < len; ++i)
                for (int j = 0; j < d; ++j)
                    x->grad[((q * n) + start + i) * d + j] += out->grad[((q * len) + i) * d + j];
    });
    return out;
}

inline TensorPtr slice_lastdim(Tape* tape, const TensorPtr& x, int start, int len) {
    const int d = x->shape.back();
    if (start < 0 || len <= 0 || start + len > d)
        throw ShapeError("slice_lastdim: range out of " + std::to_string(d));
    const int rows = x->numel() / d;
    bool rg = detail::want_grad(tape, {x});
    Shape s = x->shape;
    s.back() = len;
    auto out = Tensor::create(s, rg);
    for (int r = 0; r < rows; ++r)
        std::copy_n(x->data.data() + r * d + start, len, out->data.data() + r * len);
    if (rg) tape->record([x, out, rows, d, start, len] {
        for (int r = 0; r < rows; ++r)
            for (int j = 0; j < len; ++j) x->grad[r * d + start + j] += out->grad[r * len + j];
    });
    return out;
}

inline TensorPtr concat_lastdim(Tape* tape, const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ShapeError("concat_lastdim: no inputs");
    Shape lead = parts[0]->shape;
    lead.pop_back();
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        Shape pl = p->shape;
        pl.pop_back();
        if (pl != lead) throw ShapeError("concat_lastdim: leading dims differ");
        total += p->shape.back();
        rg = rg || (tape && p->requires_grad);
    }
    Shape s = parts[0]->shape;
    s.back() = total;
    auto out = Tensor::create(s, rg);
    const int rows = out->numel() / total;
    int off = 0;
    for (const auto& p : parts) {
        const int d = p->shape.back();
        for (int r = 0; r < rows; ++r)
            std::copy_n(p->data.data() + r * d, d, out->data.data() + r * total + off);
        off += d;
    }
    if (rg) tape->record([parts, out, rows, total] {
        int off = 0;
        for (const auto& p : parts) {
            const int d = p->shape.back();
            if (p->requires_grad)
                for (int r = 0; r < rows; ++r)
                    for (int j = 0; j < d; ++j) p->grad[r * d + j] += out->grad[r * total + off + j];
            off += d;
        }
    });
    return out;
}

// Concatenate [B, n_i, d] parts along axis 1.
inline TensorPtr concat_axis1(Tape* tape, const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ShapeError("concat_axis1: no inputs");
    const int B = parts[0]->dim(0), d = parts[0]->dim(2);
    int total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        if (p->ndim() != 3 || p->dim(0) != B || p->dim(2) != d)
            throw ShapeError("concat_axis1: mismatched part shape " + shape_str(p->shape));
        total += p->dim(1);
        rg = rg || (tape && p->requires_grad);
    }
    auto out = Tensor::create({B, total, d}, rg);
    int off = 0;
    for (const auto& p : parts) {
        const int n = p->dim(1);
        for (int q = 0; q < B; ++q)
            std::copy_n(p->data.data() + q * n * d, n * d, out->data.data() + (q * total + off) * d);
        off += n;
    }
    if (rg) tape->record([parts, out, B, d, total] {
        int off = 0;
        for (const auto& p : parts) {
            const int n = p->dim(1);
            if (p->requires_grad)
                for (int q = 0; q < B; ++q)
                    for (int i = 0; i < n * d; ++i)
                        p->grad[q * n * d + i] += out->grad[(q * total + off) * d + i];
            off += n;
        }
    });
    return out;
}

// Stack k tensors of shape [B, d] into [B, k, d].
inline TensorPtr stack_axis1(Tape* tape, const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ShapeError("stack_axis1: no inputs");
    const int B = parts[0]->dim(0), d = parts[0]->dim(1);
    bool rg = false;
    for (const auto& p : parts) {
        if (p->ndim() != 2 || p->dim(0) != B || p->dim(1) != d)
            throw ShapeError("stack_axis1: mismatched part shape " + shape_str(p->shape));
        rg = rg || (tape && p->requires_grad);
    }
    const int k = static_cast<int>(parts.size());
    auto out = Tensor::create({B, k, d}, rg);
    for (int i = 0; i < k; ++i)
        for (int q = 0; q < B; ++q)
            std::copy_n(parts[i]->data.data() + q * d, d, out->data.data() + (q * k + i) * d);
    if (rg) tape->record([parts, out, B, d, k] {
        for (int i = 0; i < k; ++i)
            if (parts[i]->requires_grad)
                for (int q = 0; q < B; ++q)
                    for (int j = 0; j < d; ++j)
                        parts[i]->grad[q * d + j] += out->grad[(q * k + i) * d + j];
    });
    return out;
}

// Mean over axis 1 of [B, n, d] -> [B, d].
inline TensorPtr mean_axis1(Tape* tape, const TensorPtr& x) {
    if (x->ndim() != 3) throw ShapeError("mean_axis1 expects a 3-d tensor");
    const int B = x->dim(0), n = x->dim(1), d = x->dim(2);
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create({B, d}, rg);
    for (int q = 0; q < B; ++q)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out->data[q * d + j] += x->data[(q * n + i) * d + j] / n;
    detail::check_finite("mean_axis1", out);
    if (rg) tape->record([x, out, B, n, d] {
        for (int q = 0; q < B; ++q)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) x->grad[(q * n + i) * d + j] += out->grad[q * d + j] / n;
    });
    return out;
}

// ---- embedding -------------------------------------------------------------

// ids: [B, T] integer matrix, table: [V, d]. Masked (pad) positions yield zero
// vectors without reading the table, so they receive no gradient; row 0 is the
// pad row and stays untouched.
inline TensorPtr embedding_lookup_masked(Tape* tape, const std::vector<int>& ids, int B, int T,
                                         const TensorPtr& table, const std::vector<uint8_t>& mask) {
    if (static_cast<int>(ids.size()) != B * T || mask.size() != ids.size())
        throw ShapeError("embedding_lookup_masked: ids/mask size mismatch");
    if (table->ndim() != 2) throw ShapeError("embedding_lookup_masked: table must be 2-d");
    const int V = table->dim(0), d = table->dim(1);
    for (int i = 0; i < B * T; ++i)
        if (ids[i] < 0 || ids[i] >= V)
            throw DataError("token id " + std::to_string(ids[i]) + " out of vocabulary (V=" +
                            std::to_string(V) + ")");
    bool rg = detail::want_grad(tape, {table});
    auto out = Tensor::create({B, T, d}, rg);
    for (int i = 0; i < B * T; ++i)
        if (mask[i]) std::copy_n(table->data.data() + ids[i] * d, d, out->data.data() + i * d);
    if (rg) tape->record([ids, mask, table, out, B, T, d] {
        for (int i = 0; i < B * T; ++i)
            if (mask[i] && ids[i] != 0)
                for (int j = 0; j < d; ++j) table->grad[ids[i] * d + j] += out->grad[i * d + j];
    });
    return out;
}

// Mean of unmasked positions of [B, T, d] -> [B, d]; all-masked rows are zero.
inline TensorPtr masked_mean_axis1(Tape* tape, const TensorPtr& x, const std::vector<uint8_t>& mask) {
    if (x->ndim() != 3) throw ShapeError("masked_mean_axis1 expects a 3-d tensor");
    const int B = x->dim(0), T = x->dim(1), d = x->dim(2);
    if (static_cast<int>(mask.size()) != B * T) throw ShapeError("masked_mean_axis1: mask size mismatch");
    bool rg = detail::want_grad(tape, {x});
    auto out = Tensor::create({B, d}, rg);
    auto counts = std::make_shared<std::vector<int>>(B, 0);
    for (int q = 0; q < B; ++q) {
        int c = 0;
        for (int t = 0; t < T; ++t)
            if (mask[q * T + t]) ++c;
        (*counts)[q] = c;
        if (c == 0) continue;
        for (int t = 0; t < T; ++t)
            if (mask[q * T + t])
                for (int j = 0; j < d; ++j) out->data[q * d + j] += x->data[(q * T + t) * d + j] / c;
    }
    if (rg) tape->record([x, out, mask, counts, B, T, d] {
        for (int q = 0; q < B; ++q) {
            const int c = (*counts)[q];
            if (c == 0) continue;
            for (int t = 0; t < T; ++t)
                if (mask[q * T + t])
                    for (int j = 0; j < d; ++j)
                        x->grad[(q * T + t) * d + j] += out->grad[q * d + j] / c;
        }
    });
    return out;
}

// ---- batch normalization ---------------------------------------------------

struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.99;
    double eps = 1e-3;

    explicit BatchNormState(int channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

// x: [B, n, C]; per-channel statistics over B*n positions. Training mode uses
// batch statistics (population variance) and updates the running stats;
// inference uses the frozen running stats.
inline TensorPtr batch_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gamma,
                            const TensorPtr& beta, BatchNormState& st, bool training) {
    if (x->ndim() != 3) throw ShapeError("batch_norm expects [B,n,C]");
    const int C = x->dim(2);
    if (gamma->numel() != C || beta->numel() != C ||
        static_cast<int>(st.running_mean.size()) != C)
        throw ShapeError("batch_norm: channel mismatch (C=" + std::to_string(C) + ")");
    const int N = x->numel() / C;
    bool rg = detail::want_grad(tape, {x, gamma, beta});
    auto out = Tensor::create(x->shape, rg);

    auto mu = std::make_shared<std::vector<double>>(C, 0.0);
    auto inv_s = std::make_shared<std::vector<double>>(C, 0.0);
    if (training) {
        std::vector<double> var(C, 0.0);
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < C; ++c) (*mu)[c] += x->data[r * C + c];
        for (int c = 0; c < C; ++c) (*mu)[c] /= N;
        for (int r = 0; r < N; ++r)
            for (int c = 0; c < C; ++c) {
                const double dv = x->data[r * C + c] - (*mu)[c];
                var[c] += dv * dv;
            }
        for (int c = 0; c < C; ++c) {
            var[c] /= N;
            (*inv_s)[c] = 1.0 / std::sqrt(var[c] + st.eps);
            st.running_mean[c] = st.momentum * st.running_mean[c] + (1.0 - st.momentum) * (*mu)[c];
            st.running_var[c] = st.momentum * st.running_var[c] + (1.0 - st.momentum) * var[c];
        }
    } else {
        for (int c = 0; c < C; ++c) {
            (*mu)[c] = st.running_mean[c];
            (*inv_s)[c] = 1.0 / std::sqrt(st.running_var[c] + st.eps);
        }
    }
    auto xhat = std::make_shared<std::vector<double>>(x->numel());
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < C; ++c) {
            const double xh = (x->data[r * C + c] - (*mu)[c]) * (*inv_s)[c];
            (*xhat)[r * C + c] = xh;
            out->data[r * C + c] = gamma->data[c] * xh + beta->data[c];
        }
    detail::check_finite("batch_norm", out);
    if (rg) tape->record([x, gamma, beta, out, xhat, inv_s, N, C, training] {
        for (int c = 0; c < C; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int r = 0; r < N; ++r) {
                const double g = out->grad[r * C + c];
                sum_g += g;
                sum_gx += g * (*xhat)[r * C + c];
            }
            if (gamma->requires_grad) gamma->grad[c] += sum_gx;
            if (beta->requires_grad) beta->grad[c] += sum_g;
            if (x->requires_grad) {
                const double gm = gamma->data[c] * (*inv_s)[c];
                if (training) {
                    const double mean_g = sum_g / N, mean_gx = sum_gx / N;
                    for (int r = 0; r < N; ++r)
                        x->grad[r * C + c] += gm * (out->grad[r * C + c] - mean_g -
                                                    (*xhat)[r * C + c] * mean_gx);
                } else {
                    for (int r = 0; r < N; ++r) x->grad[r * C + c] += gm * out->grad[r * C + c];
                }
            }
        }
    });
    return out;
}

// ---- losses ----------------------------------------------------------------

// Mean over all elements of the piecewise quadratic/linear loss with
// threshold delta; e = y - y_hat.
inline TensorPtr huber_loss(Tape* tape, const TensorPtr& pred, const TensorPtr& target, double delta) {
    if (pred->shape != target->shape)
        throw ShapeError("huber_loss: shapes " + shape_str(pred->shape) + " vs " + shape_str(target->shape));
    if (!(delta > 0.0)) throw DataError("huber_loss: delta must be positive");
    const int n = pred->numel();
    bool rg = detail::want_grad(tape, {pred, target});
    auto out = Tensor::create({1}, rg);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = target->data[i] - pred->data[i];
        const double ae = std::abs(e);
        total += ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
    }
    out->data[0] = total / n;
    detail::check_finite("huber_loss", out);
    if (rg) tape->record([pred, target, out, delta, n] {
        const double g = out->grad[0] / n;
        for (int i = 0; i < n; ++i) {
            const double e = target->data[i] - pred->data[i];
            const double de = std::abs(e) <= delta ? e : delta * (e > 0 ? 1.0 : -1.0);
            if (pred->requires_grad) pred->grad[i] -= g * de;
            if (target->requires_grad) target->grad[i] += g * de;
        }
    });
    return out;
}

// ---- optimizer -------------------------------------------------------------

struct AdamState {
    std::vector<std::vector<double>> m, v;
    int64_t t = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    void init(const std::vector<TensorPtr>& params) {
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p->numel(), 0.0);
            v.emplace_back(p->numel(), 0.0);
        }
        t = 0;
    }
};

// Standard bias-corrected Adam; reads each parameter's .grad.
inline void adam_step(const std::vector<TensorPtr>& params, AdamState& st, double lr) {
    if (!(lr > 0.0)) throw DataError("adam_step: lr must be positive");
    if (st.m.size() != params.size()) throw ShapeError("adam_step: state/parameter count mismatch");
    ++st.t;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (static_cast<int>(st.m[k].size()) != p->numel())
            throw ShapeError("adam_step: moment shape mismatch at parameter " + std::to_string(k));
        for (int i = 0; i < p->numel(); ++i) {
            const double g = p->grad[i];
            st.m[k][i] = st.beta1 * st.m[k][i] + (1.0 - st.beta1) * g;
            st.v[k][i] = st.beta2 * st.v[k][i] + (1.0 - st.beta2) * g * g;
            const double mhat = st.m[k][i] / bc1;
            const double vhat = st.v[k][i] / bc2;
            p->data[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

// ---- learning-rate schedule ------------------------------------------------

struct LrSchedule {
    double initial = 0.01;
    double decay_rate = 0.96;
    double decay_steps = 1000.0;

    double at(int64_t step) const {
        return initial * std::pow(decay_rate, static_cast<double>(step) / decay_steps);
    }
};

} // namespace ncpp
