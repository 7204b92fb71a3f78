#include "vlseg/nn/layers.hpp"

#include <cmath>

namespace vlseg::nn {

double gaussian(Rng& rng) {
    // 53-bit uniforms in (0,1]
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;
    const double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Var ParamStore::add(const std::string& name, std::vector<int> shape, std::vector<double> values) {
    for (const Param& p : params_)
        if (p.name == name) throw Error("duplicate parameter name: " + name);
    Var v = make_var(std::move(shape), std::move(values), true);
    params_.push_back(Param{name, v, true});
    return v;
}

Var ParamStore::add_gaussian(const std::string& name, std::vector<int> shape, double stddev, Rng& rng) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> values(static_cast<size_t>(n));
    for (double& x : values) x = gaussian(rng) * stddev;
    return add(name, std::move(shape), std::move(values));
}

Var ParamStore::add_constant(const std::string& name, std::vector<int> shape, double value) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return add(name, std::move(shape), std::vector<double>(static_cast<size_t>(n), value));
}

Param* ParamStore::find(const std::string& name) {
    for (Param& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
    for (const Param& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

void ParamStore::freeze_prefix(const std::string& prefix) {
    for (Param& p : params_)
        if (p.name.rfind(prefix, 0) == 0) p.trainable = false;
}

void ParamStore::zero_grad() {
    for (Param& p : params_) p.var->zero_grad();
}

int64_t ParamStore::total_size() const {
    int64_t n = 0;
    for (const Param& p : params_) n += p.var->numel();
    return n;
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
    std::vector<std::vector<double>> snap;
    snap.reserve(params_.size());
    for (const Param& p : params_) snap.push_back(p.var->v);
    return snap;
}

void ParamStore::restore(const std::vector<std::vector<double>>& snap) {
    if (snap.size() != params_.size()) throw Error("snapshot size mismatch");
    for (size_t i = 0; i < snap.size(); ++i) {
        if (snap[i].size() != params_[i].var->v.size()) throw Error("snapshot shape mismatch");
        params_[i].var->v = snap[i];
    }
}

Linear::Linear(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
    w = store.add_gaussian(prefix + ".w", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    b = store.add_constant(prefix + ".b", {1, out}, 0.0);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& prefix, int dim) {
    gamma = store.add_constant(prefix + ".gamma", {1, dim}, 1.0);
    beta = store.add_constant(prefix + ".beta", {1, dim}, 0.0);
}

MultiHeadAttention::MultiHeadAttention(ParamStore& store, const std::string& prefix, int dim_, int ctx_dim,
                                       int heads_, Rng& rng)
    : heads(heads_), dim(dim_) {
    if (dim % heads != 0) throw Error("attention dim must be divisible by heads");
    q = Linear(store, prefix + ".q", dim, dim, rng);
    k = Linear(store, prefix + ".k", ctx_dim, dim, rng);
    v = Linear(store, prefix + ".v", ctx_dim, dim, rng);
    out = Linear(store, prefix + ".out", dim, dim, rng);
}

Var MultiHeadAttention::operator()(const Var& x, const Var& ctx) const {
    const Var Q = q(x), K = k(ctx), V = v(ctx);
    const int dh = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Var merged;
    for (int h = 0; h < heads; ++h) {
        const Var qh = slice_cols(Q, h * dh, (h + 1) * dh);
        const Var kh = slice_cols(K, h * dh, (h + 1) * dh);
        const Var vh = slice_cols(V, h * dh, (h + 1) * dh);
        const Var att = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
        const Var oh = matmul(att, vh);
        merged = h == 0 ? oh : concat_cols(merged, oh);
    }
    return out(merged);
}

TransformerBlock::TransformerBlock(ParamStore& store, const std::string& prefix, int dim, int heads,
                                   int mlp_dim, Rng& rng) {
    ln1 = LayerNorm(store, prefix + ".ln1", dim);
    attn = MultiHeadAttention(store, prefix + ".attn", dim, dim, heads, rng);
    ln2 = LayerNorm(store, prefix + ".ln2", dim);
    fc1 = Linear(store, prefix + ".fc1", dim, mlp_dim, rng);
    fc2 = Linear(store, prefix + ".fc2", mlp_dim, dim, rng);
}

Var TransformerBlock::operator()(const Var& x) const {
    const Var h = ln1(x);
    const Var y = add(x, attn(h, h));
    return add(y, fc2(gelu(fc1(ln2(y)))));
}

Conv2d::Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int k, int stride_,
               int pad_, Rng& rng)
    : kh(k), kw(k), stride(stride_), pad(pad_) {
    const int fan_in = in_ch * k * k;
    w = store.add_gaussian(prefix + ".w", {fan_in, out_ch}, std::sqrt(2.0 / fan_in), rng);
    b = store.add_constant(prefix + ".b", {1, out_ch}, 0.0);
}

}  // namespace vlseg::nn
