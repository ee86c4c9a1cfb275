#pragma once
// The NCPP network: character/numeric residual-conv feature extractors,
// per-group intra-group multi-head self-attention with FFN and add&norm,
// inter-group attention over pooled group tokens, dense linear head.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ncpp/encode.hpp"
#include "ncpp/errors.hpp"
#include "ncpp/tensor.hpp"

namespace ncpp {

struct NCPPConfig {
    int heads = 2;
    int layers = 1;
    int d_model = 64;
    int embed_dim = 4;
    int ffn_mult = 2;
    int vocab_size = 100;
    int output_dim = 1;
    double huber_delta = 1.0;
    uint64_t seed = 42;
    // Ablation switches: an attention stack turned off is an identity
    // pass-through.
    bool intra_memory = true;
    bool intra_cpu = true;
    bool intra_other = true;
    bool intra_char = true;
    bool inter_enabled = true;
    // true: inter-group attention over 4 mean-pooled group tokens (default);
    // false: over the full concatenated feature sequence, re-pooled per group
    // afterwards.
    bool inter_pooled = true;

    void validate() const {
        if (d_model <= 0 || heads <= 0 || layers <= 0 || embed_dim <= 0 || output_dim <= 0 ||
            ffn_mult <= 0 || vocab_size <= 2)
            throw DataError("ncpp config: all dimensions must be positive");
        if (d_model % heads != 0)
            throw DataError("ncpp config: d_model " + std::to_string(d_model) +
                            " not divisible by heads " + std::to_string(heads));
        if (!(huber_delta > 0.0)) throw DataError("ncpp config: huber delta must be positive");
    }
};

struct AttentionLayerParams {
    TensorPtr wq, wk, wv, wo;       // [d, d]; head i owns column block i
    TensorPtr ln1_g, ln1_b;         // [d]
    TensorPtr ffn_w1, ffn_b1;       // [d, f], [f]
    TensorPtr ffn_w2, ffn_b2;       // [f, d], [d]
    TensorPtr ln2_g, ln2_b;         // [d]
};

struct ConvBnReluParams {
    TensorPtr w, b;        // [c_in, c_out], [c_out]
    TensorPtr gamma, beta; // [c_out]
    BatchNormState bn;
    bool use_bn = true;
};

struct ResConvBlockParams {
    ConvBnReluParams l1, l2;
    TensorPtr proj; // [c_in, c_out] shortcut projection; null when c_in == c_out
};

struct NCPPParams {
    NCPPConfig config;
    int memory_len = 0, cpu_len = 0, other_len = 0, n_char = 0;

    TensorPtr embedding; // [V, embed_dim]; row 0 is the pad row, zero and frozen
    ResConvBlockParams num_conv;  // 1 -> d_model
    ResConvBlockParams char_conv; // embed_dim -> d_model
    std::vector<AttentionLayerParams> intra_memory, intra_cpu, intra_other, intra_char;
    std::vector<AttentionLayerParams> inter;
    TensorPtr head_w, head_b; // [4*d_model, out], [out]

    void visit(const std::function<void(const std::string&, const TensorPtr&)>& fn) const {
        fn("embedding", embedding);
        auto conv = [&](const std::string& p, const ResConvBlockParams& c) {
            fn(p + ".l1.w", c.l1.w);
            fn(p + ".l1.b", c.l1.b);
            fn(p + ".l1.gamma", c.l1.gamma);
            fn(p + ".l1.beta", c.l1.beta);
            fn(p + ".l2.w", c.l2.w);
            fn(p + ".l2.b", c.l2.b);
            fn(p + ".l2.gamma", c.l2.gamma);
            fn(p + ".l2.beta", c.l2.beta);
            if (c.proj) fn(p + ".proj", c.proj);
        };
        conv("num_conv", num_conv);
        conv("char_conv", char_conv);
        auto stack = [&](const std::string& p, const std::vector<AttentionLayerParams>& s) {
            for (size_t l = 0; l < s.size(); ++l) {
                const std::string q = p + ".layer" + std::to_string(l);
                fn(q + ".wq", s[l].wq);
                fn(q + ".wk", s[l].wk);
                fn(q + ".wv", s[l].wv);
                fn(q + ".wo", s[l].wo);
                fn(q + ".ln1_g", s[l].ln1_g);
                fn(q + ".ln1_b", s[l].ln1_b);
                fn(q + ".ffn_w1", s[l].ffn_w1);
                fn(q + ".ffn_b1", s[l].ffn_b1);
                fn(q + ".ffn_w2", s[l].ffn_w2);
                fn(q + ".ffn_b2", s[l].ffn_b2);
                fn(q + ".ln2_g", s[l].ln2_g);
                fn(q + ".ln2_b", s[l].ln2_b);
            }
        };
        stack("intra.memory", intra_memory);
        stack("intra.cpu", intra_cpu);
        stack("intra.other", intra_other);
        stack("intra.char", intra_char);
        stack("inter", inter);
        fn("head.w", head_w);
        fn("head.b", head_b);
    }

    // Non-trainable batch-norm running statistics, addressable by path.
    void visit_state(const std::function<void(const std::string&, std::vector<double>&)>& fn) {
        auto conv = [&](const std::string& p, ResConvBlockParams& c) {
            fn(p + ".l1.bn.running_mean", c.l1.bn.running_mean);
            fn(p + ".l1.bn.running_var", c.l1.bn.running_var);
            fn(p + ".l2.bn.running_mean", c.l2.bn.running_mean);
            fn(p + ".l2.bn.running_var", c.l2.bn.running_var);
        };
        conv("num_conv", num_conv);
        conv("char_conv", char_conv);
    }

    std::vector<TensorPtr> trainable() const {
        std::vector<TensorPtr> out;
        visit([&](const std::string&, const TensorPtr& t) { out.push_back(t); });
        return out;
    }

    int64_t parameter_count() const {
        int64_t n = 0;
        visit([&](const std::string&, const TensorPtr& t) { n += t->numel(); });
        return n;
    }

    void zero_grads() const {
        visit([](const std::string&, const TensorPtr& t) {
            auto& g = const_cast<Tensor&>(*t);
            g.zero_grad();
        });
    }
};

struct AttentionTrace {
    struct Matrix {
        std::string group; // memory | cpu | other | char | inter
        int layer = 0, head = 0;
        int batch = 0, n = 0;
        std::vector<double> weights; // [batch x n x n]
    };
    std::vector<Matrix> entries;

    const Matrix* find(const std::string& group, int layer, int head) const {
        for (const auto& e : entries)
            if (e.group == group && e.layer == layer && e.head == head) return &e;
        return nullptr;
    }
};

// ---- initialization --------------------------------------------------------

namespace detail {

inline TensorPtr init_fan(std::mt19937_64& rng, int fan_in, int fan_out, Shape shape) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto t = Tensor::create(std::move(shape), true);
    for (auto& v : t->data) v = dist(rng);
    return t;
}

inline ConvBnReluParams init_conv(std::mt19937_64& rng, int c_in, int c_out) {
    ConvBnReluParams c;
    c.w = init_fan(rng, c_in, c_out, {c_in, c_out});
    c.b = Tensor::create({c_out}, true);
    c.gamma = Tensor::from({c_out}, std::vector<double>(static_cast<size_t>(c_out), 1.0), true);
    c.beta = Tensor::create({c_out}, true);
    c.bn = BatchNormState(c_out);
    return c;
}

inline ResConvBlockParams init_res_conv(std::mt19937_64& rng, int c_in, int c_out) {
    ResConvBlockParams b;
    b.l1 = init_conv(rng, c_in, c_out);
    b.l2 = init_conv(rng, c_out, c_out);
    if (c_in != c_out) b.proj = init_fan(rng, c_in, c_out, {c_in, c_out});
    return b;
}

inline std::vector<AttentionLayerParams> init_attention_stack(std::mt19937_64& rng, int layers, int d,
                                                              int ffn) {
    std::vector<AttentionLayerParams> s;
    auto ones = [&](int n) {
        return Tensor::from({n}, std::vector<double>(static_cast<size_t>(n), 1.0), true);
    };
    for (int l = 0; l < layers; ++l) {
        AttentionLayerParams p;
        p.wq = init_fan(rng, d, d, {d, d});
        p.wk = init_fan(rng, d, d, {d, d});
        p.wv = init_fan(rng, d, d, {d, d});
        p.wo = init_fan(rng, d, d, {d, d});
        p.ln1_g = ones(d);
        p.ln1_b = Tensor::create({d}, true);
        p.ffn_w1 = init_fan(rng, d, ffn, {d, ffn});
        p.ffn_b1 = Tensor::create({ffn}, true);
        p.ffn_w2 = init_fan(rng, ffn, d, {ffn, d});
        p.ffn_b2 = Tensor::create({d}, true);
        p.ln2_g = ones(d);
        p.ln2_b = Tensor::create({d}, true);
        s.push_back(std::move(p));
    }
    return s;
}

} // namespace detail

inline NCPPParams init_model(const NCPPConfig& config, const FeatureSchema& schema) {
    config.validate();
    NCPPParams p;
    p.config = config;
    auto part = group_partition(schema);
    p.memory_len = static_cast<int>(part.memory.size());
    p.cpu_len = static_cast<int>(part.cpu.size());
    p.other_len = static_cast<int>(part.other.size());
    p.n_char = static_cast<int>(part.chars.size());

    std::mt19937_64 rng(config.seed);
    const int d = config.d_model, ffn = config.ffn_mult * d;

    std::uniform_real_distribution<double> emb_dist(-0.05, 0.05);
    p.embedding = Tensor::create({config.vocab_size, config.embed_dim}, true);
    for (int i = config.embed_dim; i < p.embedding->numel(); ++i) p.embedding->data[i] = emb_dist(rng);

    p.num_conv = detail::init_res_conv(rng, 1, d);
    p.char_conv = detail::init_res_conv(rng, config.embed_dim, d);
    p.intra_memory = detail::init_attention_stack(rng, config.layers, d, ffn);
    p.intra_cpu = detail::init_attention_stack(rng, config.layers, d, ffn);
    p.intra_other = detail::init_attention_stack(rng, config.layers, d, ffn);
    p.intra_char = detail::init_attention_stack(rng, config.layers, d, ffn);
    p.inter = detail::init_attention_stack(rng, config.layers, d, ffn);
    p.head_w = detail::init_fan(rng, 4 * d, config.output_dim, {4 * d, config.output_dim});
    p.head_b = Tensor::create({config.output_dim}, true);
    return p;
}

// ---- forward pass ----------------------------------------------------------

namespace detail {

inline TensorPtr conv_bn_relu(Tape* tape, const TensorPtr& x, ConvBnReluParams& c, bool training) {
    auto y = add_bias(tape, linear(tape, x, c.w), c.b);
    if (c.use_bn) y = batch_norm(tape, y, c.gamma, c.beta, c.bn, training);
    return relu(tape, y);
}

// Eq-2 style residual block with a learned projection skip when channel
// counts differ.
inline TensorPtr res_conv_block(Tape* tape, const TensorPtr& x, ResConvBlockParams& blk, bool training) {
    auto f = conv_bn_relu(tape, conv_bn_relu(tape, x, blk.l1, training), blk.l2, training);
    auto skip = blk.proj ? linear(tape, x, blk.proj) : x;
    return add(tape, f, skip);
}

inline TensorPtr attention_layer(Tape* tape, const TensorPtr& x, const AttentionLayerParams& p, int heads,
                                 const std::string& group, int layer_idx, AttentionTrace* trace) {
    const int d = x->dim(2);
    const int dk = d / heads;
    auto q = linear(tape, x, p.wq);
    auto k = linear(tape, x, p.wk);
    auto v = linear(tape, x, p.wv);
    std::vector<TensorPtr> head_outs;
    for (int h = 0; h < heads; ++h) {
        auto qh = slice_lastdim(tape, q, h * dk, dk);
        auto kh = slice_lastdim(tape, k, h * dk, dk);
        auto vh = slice_lastdim(tape, v, h * dk, dk);
        auto scores = scale(tape, bmm(tape, qh, transpose12(tape, kh)), 1.0 / std::sqrt(double(dk)));
        auto attn = softmax(tape, scores, 2);
        if (trace) {
            AttentionTrace::Matrix m;
            m.group = group;
            m.layer = layer_idx;
            m.head = h;
            m.batch = attn->dim(0);
            m.n = attn->dim(1);
            m.weights = attn->data;
            trace->entries.push_back(std::move(m));
        }
        head_outs.push_back(bmm(tape, attn, vh));
    }
    auto mh = linear(tape, concat_lastdim(tape, head_outs), p.wo);
    auto ln1 = layer_norm(tape, add(tape, x, mh), p.ln1_g, p.ln1_b);
    auto hidden = relu(tape, add_bias(tape, linear(tape, ln1, p.ffn_w1), p.ffn_b1));
    auto ffn = add_bias(tape, linear(tape, hidden, p.ffn_w2), p.ffn_b2);
    return layer_norm(tape, add(tape, ln1, ffn), p.ln2_g, p.ln2_b);
}

inline TensorPtr attention_stack(Tape* tape, TensorPtr x, const std::vector<AttentionLayerParams>& s,
                                 int heads, bool enabled, const std::string& group,
                                 AttentionTrace* trace) {
    if (!enabled) return x;
    for (size_t l = 0; l < s.size(); ++l)
        x = attention_layer(tape, x, s[l], heads, group, static_cast<int>(l), trace);
    return x;
}

} // namespace detail

// Per-group feature sequences [B x group_len x d_model] after the conv
// feature extractors, ordered memory/cpu/other/char.
inline std::vector<TensorPtr> feature_division(Tape* tape, NCPPParams& P, const EncodedBatch& b,
                                               bool training) {
    if (b.memory_len != P.memory_len || b.cpu_len != P.cpu_len || b.other_len != P.other_len ||
        b.n_char != P.n_char)
        throw ShapeError("encoded batch group lengths do not match the model schema");
    const int B = b.batch;

    // Numeric path: all numeric groups as one [B, n_num, 1] sequence through a
    // shared conv block, then split back into groups.
    const int n_num = b.memory_len + b.cpu_len + b.other_len;
    auto num_in = Tensor::create({B, n_num, 1});
    for (int r = 0; r < B; ++r) {
        int pos = 0;
        for (int i = 0; i < b.memory_len; ++i) num_in->data[(r * n_num + pos++)] = b.memory[static_cast<size_t>(r * b.memory_len + i)];
        for (int i = 0; i < b.cpu_len; ++i) num_in->data[(r * n_num + pos++)] = b.cpu[static_cast<size_t>(r * b.cpu_len + i)];
        for (int i = 0; i < b.other_len; ++i) num_in->data[(r * n_num + pos++)] = b.other[static_cast<size_t>(r * b.other_len + i)];
    }
    auto num_feat = detail::res_conv_block(tape, num_in, P.num_conv, training);
    auto mem = slice_axis1(tape, num_feat, 0, b.memory_len);
    auto cpu = slice_axis1(tape, num_feat, b.memory_len, b.cpu_len);
    auto other = slice_axis1(tape, num_feat, b.memory_len + b.cpu_len, b.other_len);

    // Char path: masked mean of token embeddings per feature, then conv.
    std::vector<TensorPtr> char_feats;
    for (int f = 0; f < b.n_char; ++f) {
        std::vector<int> ids(static_cast<size_t>(B * b.t_max));
        std::vector<uint8_t> mask(static_cast<size_t>(B * b.t_max));
        for (int r = 0; r < B; ++r)
            for (int t = 0; t < b.t_max; ++t) {
                const size_t src = static_cast<size_t>((r * b.n_char + f) * b.t_max + t);
                ids[static_cast<size_t>(r * b.t_max + t)] = b.char_ids[src];
                mask[static_cast<size_t>(r * b.t_max + t)] = b.char_mask[src];
            }
        auto emb = embedding_lookup_masked(tape, ids, B, b.t_max, P.embedding, mask);
        char_feats.push_back(masked_mean_axis1(tape, emb, mask));
    }
    auto char_seq = stack_axis1(tape, char_feats); // [B, n_char, embed_dim]
    auto chars = detail::res_conv_block(tape, char_seq, P.char_conv, training);

    return {mem, cpu, other, chars};
}

inline TensorPtr forward(Tape* tape, NCPPParams& P, const EncodedBatch& b, bool training,
                         AttentionTrace* trace = nullptr) {
    const auto& cfg = P.config;
    auto groups = feature_division(tape, P, b, training);

    groups[0] = detail::attention_stack(tape, groups[0], P.intra_memory, cfg.heads, cfg.intra_memory,
                                        "memory", trace);
    groups[1] = detail::attention_stack(tape, groups[1], P.intra_cpu, cfg.heads, cfg.intra_cpu, "cpu",
                                        trace);
    groups[2] = detail::attention_stack(tape, groups[2], P.intra_other, cfg.heads, cfg.intra_other,
                                        "other", trace);
    groups[3] = detail::attention_stack(tape, groups[3], P.intra_char, cfg.heads, cfg.intra_char, "char",
                                        trace);

    TensorPtr fused;
    if (cfg.inter_pooled) {
        std::vector<TensorPtr> tokens;
        for (auto& g : groups) tokens.push_back(mean_axis1(tape, g));
        auto seq = stack_axis1(tape, tokens); // [B, 4, d]
        seq = detail::attention_stack(tape, seq, P.inter, cfg.heads, cfg.inter_enabled, "inter", trace);
        fused = reshape(tape, seq, {b.batch, 4 * cfg.d_model});
    } else {
        auto seq = concat_axis1(tape, groups); // [B, n_total, d]
        seq = detail::attention_stack(tape, seq, P.inter, cfg.heads, cfg.inter_enabled, "inter", trace);
        std::vector<TensorPtr> tokens;
        int off = 0;
        for (int len : {P.memory_len, P.cpu_len, P.other_len, P.n_char}) {
            tokens.push_back(mean_axis1(tape, slice_axis1(tape, seq, off, len)));
            off += len;
        }
        fused = reshape(tape, stack_axis1(tape, tokens), {b.batch, 4 * cfg.d_model});
    }
    // Dense head, identity activation; one unit per benchmark.
    return add_bias(tape, linear(tape, fused, P.head_w), P.head_b);
}

// Deep copy (weights and batch-norm state).
inline NCPPParams clone_params(const NCPPParams& src) {
    NCPPParams dst = src;
    auto copy_tensor = [](TensorPtr& t) {
        if (t) t = Tensor::from(t->shape, t->data, t->requires_grad);
    };
    auto copy_conv = [&](ResConvBlockParams& c) {
        for (auto* t : {&c.l1.w, &c.l1.b, &c.l1.gamma, &c.l1.beta, &c.l2.w, &c.l2.b, &c.l2.gamma,
                        &c.l2.beta, &c.proj})
            copy_tensor(*t);
    };
    auto copy_stack = [&](std::vector<AttentionLayerParams>& s) {
        for (auto& p : s)
            for (auto* t : {&p.wq, &p.wk, &p.wv, &p.wo, &p.ln1_g, &p.ln1_b, &p.ffn_w1, &p.ffn_b1,
                            &p.ffn_w2, &p.ffn_b2, &p.ln2_g, &p.ln2_b})
                copy_tensor(*t);
    };
    copy_tensor(dst.embedding);
    copy_conv(dst.num_conv);
    copy_conv(dst.char_conv);
    copy_stack(dst.intra_memory);
    copy_stack(dst.intra_cpu);
    copy_stack(dst.intra_other);
    copy_stack(dst.intra_char);
    copy_stack(dst.inter);
    copy_tensor(dst.head_w);
    copy_tensor(dst.head_b);
    return dst;
}

} // namespace ncpp
