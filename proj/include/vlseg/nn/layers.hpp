#pragma once

#include <string>
#include <vector>

#include "vlseg/nn/tensor.hpp"

namespace vlseg::nn {

struct Param {
    std::string name;
    Var var;
    bool trainable = true;
};

// Deterministic N(0,1) draw (Box-Muller over the raw engine), so parameter
// initialization does not depend on the standard library's distributions.
double gaussian(Rng& rng);

// Owns the named parameter leaves of a model.
class ParamStore {
public:
    Var add(const std::string& name, std::vector<int> shape, std::vector<double> values);
    Var add_gaussian(const std::string& name, std::vector<int> shape, double stddev, Rng& rng);
    Var add_constant(const std::string& name, std::vector<int> shape, double value);

    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    // Marks every parameter whose name starts with `prefix` non-trainable.
    void freeze_prefix(const std::string& prefix);
    void zero_grad();
    int64_t total_size() const;

    // Deep copy / restore of all parameter values, for checkpointing.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& snap);

private:
    std::vector<Param> params_;
};

struct Linear {
    Var w, b;
    Linear() = default;
    Linear(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
    Var operator()(const Var& x) const { return add_rowvec(matmul(x, w), b); }
};

struct LayerNorm {
    Var gamma, beta;
    LayerNorm() = default;
    LayerNorm(ParamStore& store, const std::string& prefix, int dim);
    Var operator()(const Var& x) const { return add_rowvec(mul_rowvec(layernorm_rows(x), gamma), beta); }
};

// Scaled dot-product attention with h heads. Self-attention when ctx == x.
struct MultiHeadAttention {
    Linear q, k, v, out;
    int heads = 1;
    int dim = 0;
    MultiHeadAttention() = default;
    MultiHeadAttention(ParamStore& store, const std::string& prefix, int dim, int ctx_dim, int heads,
                       Rng& rng);
    Var operator()(const Var& x, const Var& ctx) const;
};

// Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x)).
struct TransformerBlock {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear fc1, fc2;
    TransformerBlock() = default;
    TransformerBlock(ParamStore& store, const std::string& prefix, int dim, int heads, int mlp_dim,
                     Rng& rng);
    Var operator()(const Var& x) const;
};

struct Conv2d {
    Var w, b;  // w: [C*kh*kw, OC]
    int kh = 3, kw = 3, stride = 1, pad = 1;
    Conv2d() = default;
    Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int k, int stride, int pad,
           Rng& rng);
    Var operator()(const Var& x) const { return conv2d(x, w, b, kh, kw, stride, pad); }
};

}  // namespace vlseg::nn
