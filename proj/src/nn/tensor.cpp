#include "vlseg/nn/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace vlseg::nn {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->shape != b->shape) throw Error(std::string(op) + ": shape mismatch");
}

void check_2d(const Var& a, const char* op) {
    if (a->shape.size() != 2) throw Error(std::string(op) + ": expected 2D tensor");
}

Var make_op(std::vector<int> shape, std::vector<double> values, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->v = std::move(values);
    n->parents = std::move(parents);
    for (const Var& p : n->parents) n->requires_grad |= p->requires_grad;
    if (n->requires_grad) {
        n->backward_fn = std::move(backward_fn);
    } else {
        n->parents.clear();  // release subgraphs that cannot receive gradients
    }
    return n;
}

// Accumulates src into dst->grad when dst participates in the graph.
inline void acc(const Var& dst, const std::vector<double>& src) {
    if (!dst->requires_grad) return;
    auto& g = dst->grad_buf();
    for (size_t i = 0; i < src.size(); ++i) g[i] += src[i];
}

}  // namespace

Var make_var(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    auto n = std::make_shared<Node>();
    int64_t numel = 1;
    for (int d : shape) numel *= d;
    if (static_cast<int64_t>(values.size()) != numel) throw Error("make_var: value count mismatch");
    n->shape = std::move(shape);
    n->v = std::move(values);
    n->requires_grad = requires_grad;
    return n;
}

Var make_var(std::vector<int> shape, double fill, bool requires_grad) {
    int64_t numel = 1;
    for (int d : shape) numel *= d;
    return make_var(std::move(shape), std::vector<double>(static_cast<size_t>(numel), fill), requires_grad);
}

Var scalar(double value) { return make_var({1}, {value}); }

void backward(const Var& root) {
    if (root->numel() != 1) throw Error("backward: root must be scalar");
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx++].get();
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->grad_buf()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] + b->v[i];
    return make_op(a->shape, std::move(out), {a, b}, [a, b](Node& n) {
        acc(a, n.g);
        acc(b, n.g);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] - b->v[i];
    return make_op(a->shape, std::move(out), {a, b}, [a, b](Node& n) {
        acc(a, n.g);
        if (b->requires_grad) {
            auto& g = b->grad_buf();
            for (size_t i = 0; i < n.g.size(); ++i) g[i] -= n.g[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] * b->v[i];
    return make_op(a->shape, std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            auto& g = a->grad_buf();
            for (size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] * b->v[i];
        }
        if (b->requires_grad) {
            auto& g = b->grad_buf();
            for (size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] * a->v[i];
        }
    });
}

Var div(const Var& a, const Var& b) {
    check_same_shape(a, b, "div");
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] / b->v[i];
    return make_op(a->shape, std::move(out), {a, b}, [a, b](Node& n) {
        if (a->requires_grad) {
            auto& g = a->grad_buf();
            for (size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] / b->v[i];
        }
        if (b->requires_grad) {
            auto& g = b->grad_buf();
            for (size_t i = 0; i < n.g.size(); ++i)
                g[i] -= n.g[i] * a->v[i] / (b->v[i] * b->v[i]);
        }
    });
}

Var scale(const Var& a, double s) {
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] * s;
    return make_op(a->shape, std::move(out), {a}, [a, s](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (size_t i = 0; i < n.g.size(); ++i) g[i] += n.g[i] * s;
    });
}

Var add_scalar(const Var& a, double s) {
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] + s;
    return make_op(a->shape, std::move(out), {a}, [a](Node& n) { acc(a, n.g); });
}

Var add_rowvec(const Var& a, const Var& r) {
    check_2d(a, "add_rowvec");
    if (r->shape.size() != 2 || r->rows() != 1 || r->cols() != a->cols())
        throw Error("add_rowvec: row vector shape mismatch");
    const int m = a->rows(), k = a->cols();
    std::vector<double> out(a->v.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j)
            out[static_cast<size_t>(i) * k + j] = a->v[static_cast<size_t>(i) * k + j] + r->v[static_cast<size_t>(j)];
    return make_op(a->shape, std::move(out), {a, r}, [a, r, m, k](Node& n) {
        acc(a, n.g);
        if (r->requires_grad) {
            auto& g = r->grad_buf();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j) g[static_cast<size_t>(j)] += n.g[static_cast<size_t>(i) * k + j];
        }
    });
}

Var mul_rowvec(const Var& a, const Var& r) {
    check_2d(a, "mul_rowvec");
    if (r->shape.size() != 2 || r->rows() != 1 || r->cols() != a->cols())
        throw Error("mul_rowvec: row vector shape mismatch");
    const int m = a->rows(), k = a->cols();
    std::vector<double> out(a->v.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j)
            out[static_cast<size_t>(i) * k + j] = a->v[static_cast<size_t>(i) * k + j] * r->v[static_cast<size_t>(j)];
    return make_op(a->shape, std::move(out), {a, r}, [a, r, m, k](Node& n) {
        if (a->requires_grad) {
            auto& g = a->grad_buf();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j)
                    g[static_cast<size_t>(i) * k + j] += n.g[static_cast<size_t>(i) * k + j] * r->v[static_cast<size_t>(j)];
        }
        if (r->requires_grad) {
            auto& g = r->grad_buf();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < k; ++j)
                    g[static_cast<size_t>(j)] +=
                        n.g[static_cast<size_t>(i) * k + j] * a->v[static_cast<size_t>(i) * k + j];
        }
    });
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

Var relu(const Var& a) {
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->v[i] > 0 ? a->v[i] : 0.0;
    return make_op(a->shape, std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (size_t i = 0; i < n.g.size(); ++i)
            if (a->v[i] > 0) g[i] += n.g[i];
    });
}

Var gelu(const Var& a) {
    constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double k = 0.044715;
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = a->v[i];
        out[i] = 0.5 * x * (1.0 + std::tanh(c * (x + k * x * x * x)));
    }
    return make_op(a->shape, std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (size_t i = 0; i < n.g.size(); ++i) {
            const double x = a->v[i];
            const double u = c * (x + k * x * x * x);
            const double t = std::tanh(u);
            const double du = c * (1.0 + 3.0 * k * x * x);
            g[i] += n.g[i] * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du);
        }
    });
}

Var sigmoid(const Var& a) {
    std::vector<double> out(a->v.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a->v[i]));
    return make_op(a->shape, std::move(out), {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (size_t i = 0; i < n.g.size(); ++i) {
            const double s = n.v[i];
            g[i] += n.g[i] * s * (1.0 - s);
        }
    });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
    check_2d(a, "matmul");
    check_2d(b, "matmul");
    if (a->cols() != b->rows()) throw Error("matmul: inner dimension mismatch");
    const int m = a->rows(), k = a->cols(), n = b->cols();
    std::vector<double> out(static_cast<size_t>(m) * n);
    {
        MapC A(a->v.data(), m, k), B(b->v.data(), k, n);
        MapM O(out.data(), m, n);
        O.noalias() = A * B;
    }
    return make_op({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Node& node) {
        MapC G(node.g.data(), m, n);
        if (a->requires_grad) {
            MapC B(b->v.data(), k, n);
            MapM GA(a->grad_buf().data(), m, k);
            GA.noalias() += G * B.transpose();
        }
        if (b->requires_grad) {
            MapC A(a->v.data(), m, k);
            MapM GB(b->grad_buf().data(), k, n);
            GB.noalias() += A.transpose() * G;
        }
    });
}

Var transpose(const Var& a) {
    check_2d(a, "transpose");
    const int m = a->rows(), k = a->cols();
    std::vector<double> out(a->v.size());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < k; ++j) out[static_cast<size_t>(j) * m + i] = a->v[static_cast<size_t>(i) * k + j];
    return make_op({k, m}, std::move(out), {a}, [a, m, k](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < k; ++j) g[static_cast<size_t>(i) * k + j] += n.g[static_cast<size_t>(j) * m + i];
    });
}

Var softmax_rows(const Var& a) {
    check_2d(a, "softmax_rows");
    const int m = a->rows(), k = a->cols();
    std::vector<double> out(a->v.size());
    for (int i = 0; i < m; ++i) {
        const double* row = a->v.data() + static_cast<size_t>(i) * k;
        double* orow = out.data() + static_cast<size_t>(i) * k;
        double mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double z = 0;
        for (int j = 0; j < k; ++j) z += (orow[j] = std::exp(row[j] - mx));
        for (int j = 0; j < k; ++j) orow[j] /= z;
    }
    auto result = make_op(a->shape, std::move(out), {a}, nullptr);
    if (result->requires_grad) {
        result->backward_fn = [a, m, k](Node& n) {
            if (!a->requires_grad) return;
            auto& g = a->grad_buf();
            for (int i = 0; i < m; ++i) {
                const double* s = n.v.data() + static_cast<size_t>(i) * k;
                const double* go = n.g.data() + static_cast<size_t>(i) * k;
                double dot = 0;
                for (int j = 0; j < k; ++j) dot += go[j] * s[j];
                for (int j = 0; j < k; ++j) g[static_cast<size_t>(i) * k + j] += (go[j] - dot) * s[j];
            }
        };
    }
    return result;
}

Var layernorm_rows(const Var& a, double eps) {
    check_2d(a, "layernorm_rows");
    const int m = a->rows(), k = a->cols();
    std::vector<double> out(a->v.size());
    std::vector<double> mu(static_cast<size_t>(m)), istd(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        const double* row = a->v.data() + static_cast<size_t>(i) * k;
        double mean = 0;
        for (int j = 0; j < k; ++j) mean += row[j];
        mean /= k;
        double var = 0;
        for (int j = 0; j < k; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= k;
        const double inv = 1.0 / std::sqrt(var + eps);
        mu[static_cast<size_t>(i)] = mean;
        istd[static_cast<size_t>(i)] = inv;
        for (int j = 0; j < k; ++j) out[static_cast<size_t>(i) * k + j] = (row[j] - mean) * inv;
    }
    return make_op(a->shape, std::move(out), {a},
                   [a, m, k, mu = std::move(mu), istd = std::move(istd)](Node& n) {
                       if (!a->requires_grad) return;
                       auto& g = a->grad_buf();
                       for (int i = 0; i < m; ++i) {
                           const double* y = n.v.data() + static_cast<size_t>(i) * k;
                           const double* go = n.g.data() + static_cast<size_t>(i) * k;
                           double gsum = 0, gysum = 0;
                           for (int j = 0; j < k; ++j) {
                               gsum += go[j];
                               gysum += go[j] * y[j];
                           }
                           const double inv = istd[static_cast<size_t>(i)];
                           for (int j = 0; j < k; ++j)
                               g[static_cast<size_t>(i) * k + j] +=
                                   inv * (go[j] - gsum / k - y[j] * gysum / k);
                       }
                   });
}

Var concat_cols(const Var& a, const Var& b) {
    check_2d(a, "concat_cols");
    check_2d(b, "concat_cols");
    if (a->rows() != b->rows()) throw Error("concat_cols: row mismatch");
    const int m = a->rows(), ka = a->cols(), kb = b->cols();
    std::vector<double> out(static_cast<size_t>(m) * (ka + kb));
    for (int i = 0; i < m; ++i) {
        std::copy_n(a->v.data() + static_cast<size_t>(i) * ka, ka, out.data() + static_cast<size_t>(i) * (ka + kb));
        std::copy_n(b->v.data() + static_cast<size_t>(i) * kb, kb,
                    out.data() + static_cast<size_t>(i) * (ka + kb) + ka);
    }
    return make_op({m, ka + kb}, std::move(out), {a, b}, [a, b, m, ka, kb](Node& n) {
        for (int i = 0; i < m; ++i) {
            if (a->requires_grad) {
                auto& g = a->grad_buf();
                for (int j = 0; j < ka; ++j)
                    g[static_cast<size_t>(i) * ka + j] += n.g[static_cast<size_t>(i) * (ka + kb) + j];
            }
            if (b->requires_grad) {
                auto& g = b->grad_buf();
                for (int j = 0; j < kb; ++j)
                    g[static_cast<size_t>(i) * kb + j] += n.g[static_cast<size_t>(i) * (ka + kb) + ka + j];
            }
        }
    });
}

Var slice_cols(const Var& a, int c0, int c1) {
    check_2d(a, "slice_cols");
    if (c0 < 0 || c1 > a->cols() || c0 >= c1) throw Error("slice_cols: bad range");
    const int m = a->rows(), k = a->cols(), kc = c1 - c0;
    std::vector<double> out(static_cast<size_t>(m) * kc);
    for (int i = 0; i < m; ++i)
        std::copy_n(a->v.data() + static_cast<size_t>(i) * k + c0, kc, out.data() + static_cast<size_t>(i) * kc);
    return make_op({m, kc}, std::move(out), {a}, [a, m, k, kc, c0](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < kc; ++j)
                g[static_cast<size_t>(i) * k + c0 + j] += n.g[static_cast<size_t>(i) * kc + j];
    });
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
    check_2d(table, "gather_rows");
    const int k = table->cols();
    std::vector<double> out(ids.size() * static_cast<size_t>(k));
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= table->rows()) throw Error("gather_rows: id out of range");
        std::copy_n(table->v.data() + static_cast<size_t>(ids[i]) * k, k, out.data() + i * k);
    }
    return make_op({static_cast<int>(ids.size()), k}, std::move(out), {table}, [table, ids, k](Node& n) {
        if (!table->requires_grad) return;
        auto& g = table->grad_buf();
        for (size_t i = 0; i < ids.size(); ++i)
            for (int j = 0; j < k; ++j)
                g[static_cast<size_t>(ids[i]) * k + j] += n.g[i * static_cast<size_t>(k) + j];
    });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum(const Var& a) {
    double total = 0;
    for (double x : a->v) total += x;
    return make_op({1}, {total}, {a}, [a](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (double& x : g) x += n.g[0];
    });
}

Var mean(const Var& a) {
    const double inv = 1.0 / static_cast<double>(a->numel());
    double total = 0;
    for (double x : a->v) total += x;
    return make_op({1}, {total * inv}, {a}, [a, inv](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (double& x : g) x += n.g[0] * inv;
    });
}

// ---------------------------------------------------------------------------
// spatial ops
// ---------------------------------------------------------------------------

namespace {

struct ConvDims {
    int c, h, w, oh, ow;
};

ConvDims conv_dims(const Var& x, int kh, int kw, int stride, int pad) {
    if (x->shape.size() != 3) throw Error("conv2d: expected {C,H,W} input");
    ConvDims d{};
    d.c = x->shape[0];
    d.h = x->shape[1];
    d.w = x->shape[2];
    d.oh = (d.h + 2 * pad - kh) / stride + 1;
    d.ow = (d.w + 2 * pad - kw) / stride + 1;
    if (d.oh <= 0 || d.ow <= 0) throw Error("conv2d: kernel larger than padded input");
    return d;
}

// cols: [OH*OW, C*kh*kw]
void im2col(const std::vector<double>& x, const ConvDims& d, int kh, int kw, int stride, int pad,
            std::vector<double>& cols) {
    const int patch = d.c * kh * kw;
    cols.assign(static_cast<size_t>(d.oh) * d.ow * patch, 0.0);
    for (int oy = 0; oy < d.oh; ++oy)
        for (int ox = 0; ox < d.ow; ++ox) {
            double* dst = cols.data() + (static_cast<size_t>(oy) * d.ow + ox) * patch;
            for (int c = 0; c < d.c; ++c)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int iy = oy * stride + ky - pad;
                        const int ix = ox * stride + kx - pad;
                        double val = 0;
                        if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                            val = x[(static_cast<size_t>(c) * d.h + iy) * d.w + ix];
                        *dst++ = val;
                    }
        }
}

void col2im_add(const std::vector<double>& cols, const ConvDims& d, int kh, int kw, int stride, int pad,
                std::vector<double>& gx) {
    const int patch = d.c * kh * kw;
    for (int oy = 0; oy < d.oh; ++oy)
        for (int ox = 0; ox < d.ow; ++ox) {
            const double* src = cols.data() + (static_cast<size_t>(oy) * d.ow + ox) * patch;
            for (int c = 0; c < d.c; ++c)
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int iy = oy * stride + ky - pad;
                        const int ix = ox * stride + kx - pad;
                        if (iy >= 0 && iy < d.h && ix >= 0 && ix < d.w)
                            gx[(static_cast<size_t>(c) * d.h + iy) * d.w + ix] += *src;
                        ++src;
                    }
        }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int kh, int kw, int stride, int pad) {
    const ConvDims d = conv_dims(x, kh, kw, stride, pad);
    const int patch = d.c * kh * kw;
    if (w->shape.size() != 2 || w->rows() != patch) throw Error("conv2d: weight must be [C*kh*kw, OC]");
    const int oc = w->cols();
    if (b->numel() != oc) throw Error("conv2d: bias size mismatch");

    auto cols = std::make_shared<std::vector<double>>();
    im2col(x->v, d, kh, kw, stride, pad, *cols);

    const int npos = d.oh * d.ow;
    std::vector<double> outmat(static_cast<size_t>(npos) * oc);
    {
        MapC C(cols->data(), npos, patch), W(w->v.data(), patch, oc);
        MapM O(outmat.data(), npos, oc);
        O.noalias() = C * W;
    }
    // transpose [npos, oc] -> {oc, oh, ow}
    std::vector<double> out(static_cast<size_t>(oc) * npos);
    for (int p = 0; p < npos; ++p)
        for (int o = 0; o < oc; ++o)
            out[static_cast<size_t>(o) * npos + p] = outmat[static_cast<size_t>(p) * oc + o] + b->v[static_cast<size_t>(o)];

    return make_op({oc, d.oh, d.ow}, std::move(out), {x, w, b},
                   [x, w, b, d, kh, kw, stride, pad, patch, oc, npos, cols](Node& n) {
                       // grad wrt output back to [npos, oc]
                       std::vector<double> gout(static_cast<size_t>(npos) * oc);
                       for (int o = 0; o < oc; ++o)
                           for (int p = 0; p < npos; ++p)
                               gout[static_cast<size_t>(p) * oc + o] = n.g[static_cast<size_t>(o) * npos + p];
                       if (b->requires_grad) {
                           auto& gb = b->grad_buf();
                           for (int p = 0; p < npos; ++p)
                               for (int o = 0; o < oc; ++o) gb[static_cast<size_t>(o)] += gout[static_cast<size_t>(p) * oc + o];
                       }
                       if (w->requires_grad) {
                           MapC C(cols->data(), npos, patch), G(gout.data(), npos, oc);
                           MapM GW(w->grad_buf().data(), patch, oc);
                           GW.noalias() += C.transpose() * G;
                       }
                       if (x->requires_grad) {
                           std::vector<double> gcols(static_cast<size_t>(npos) * patch);
                           MapC W(w->v.data(), patch, oc), G(gout.data(), npos, oc);
                           MapM GC(gcols.data(), npos, patch);
                           GC.noalias() = G * W.transpose();
                           col2im_add(gcols, d, kh, kw, stride, pad, x->grad_buf());
                       }
                   });
}

Var upsample_nearest2x(const Var& x) {
    if (x->shape.size() != 3) throw Error("upsample_nearest2x: expected {C,H,W}");
    const int c = x->shape[0], h = x->shape[1], w = x->shape[2];
    std::vector<double> out(static_cast<size_t>(c) * 4 * h * w);
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int xx = 0; xx < 2 * w; ++xx)
                out[(static_cast<size_t>(ch) * 2 * h + y) * 2 * w + xx] =
                    x->v[(static_cast<size_t>(ch) * h + y / 2) * w + xx / 2];
    return make_op({c, 2 * h, 2 * w}, std::move(out), {x}, [x, c, h, w](Node& n) {
        if (!x->requires_grad) return;
        auto& g = x->grad_buf();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int xx = 0; xx < 2 * w; ++xx)
                    g[(static_cast<size_t>(ch) * h + y / 2) * w + xx / 2] +=
                        n.g[(static_cast<size_t>(ch) * 2 * h + y) * 2 * w + xx];
    });
}

Var concat_chan(const Var& a, const Var& b) {
    if (a->shape.size() != 3 || b->shape.size() != 3 || a->shape[1] != b->shape[1] ||
        a->shape[2] != b->shape[2])
        throw Error("concat_chan: spatial shape mismatch");
    const int ca = a->shape[0], cb = b->shape[0], hw = a->shape[1] * a->shape[2];
    std::vector<double> out(a->v.size() + b->v.size());
    std::copy(a->v.begin(), a->v.end(), out.begin());
    std::copy(b->v.begin(), b->v.end(), out.begin() + static_cast<ptrdiff_t>(a->v.size()));
    return make_op({ca + cb, a->shape[1], a->shape[2]}, std::move(out), {a, b}, [a, b, ca, cb, hw](Node& n) {
        if (a->requires_grad) {
            auto& g = a->grad_buf();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.g[i];
        }
        if (b->requires_grad) {
            auto& g = b->grad_buf();
            const size_t off = static_cast<size_t>(ca) * hw;
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.g[off + i];
        }
    });
}

Var tokens_to_grid(const Var& a, int h, int w) {
    check_2d(a, "tokens_to_grid");
    if (a->rows() != h * w) throw Error("tokens_to_grid: token count mismatch");
    const int dim = a->cols();
    std::vector<double> out(a->v.size());
    for (int t = 0; t < h * w; ++t)
        for (int d = 0; d < dim; ++d)
            out[static_cast<size_t>(d) * h * w + t] = a->v[static_cast<size_t>(t) * dim + d];
    return make_op({dim, h, w}, std::move(out), {a}, [a, h, w, dim](Node& n) {
        if (!a->requires_grad) return;
        auto& g = a->grad_buf();
        for (int t = 0; t < h * w; ++t)
            for (int d = 0; d < dim; ++d)
                g[static_cast<size_t>(t) * dim + d] += n.g[static_cast<size_t>(d) * h * w + t];
    });
}

Var grid_to_tokens(const Var& x) {
    if (x->shape.size() != 3) throw Error("grid_to_tokens: expected {C,H,W}");
    const int c = x->shape[0], hw = x->shape[1] * x->shape[2];
    std::vector<double> out(x->v.size());
    for (int d = 0; d < c; ++d)
        for (int t = 0; t < hw; ++t)
            out[static_cast<size_t>(t) * c + d] = x->v[static_cast<size_t>(d) * hw + t];
    return make_op({hw, c}, std::move(out), {x}, [x, c, hw](Node& n) {
        if (!x->requires_grad) return;
        auto& g = x->grad_buf();
        for (int d = 0; d < c; ++d)
            for (int t = 0; t < hw; ++t)
                g[static_cast<size_t>(d) * hw + t] += n.g[static_cast<size_t>(t) * c + d];
    });
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

Var bce_with_logits(const Var& logits, const Var& target, double clamp_eps) {
    check_same_shape(logits, target, "bce_with_logits");
    const size_t n = logits->v.size();
    const double inv = 1.0 / static_cast<double>(n);
    double total = 0;
    std::vector<double> probs(n);
    for (size_t i = 0; i < n; ++i) {
        double p = 1.0 / (1.0 + std::exp(-logits->v[i]));
        p = std::min(std::max(p, clamp_eps), 1.0 - clamp_eps);
        probs[i] = p;
        const double t = target->v[i];
        total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return make_op({1}, {total * inv}, {logits, target},
                   [logits, target, probs = std::move(probs), clamp_eps, inv](Node& n) {
                       if (!logits->requires_grad) return;
                       auto& g = logits->grad_buf();
                       for (size_t i = 0; i < g.size(); ++i) {
                           const double p = probs[i];
                           // clamp is flat at the boundaries
                           if (p <= clamp_eps || p >= 1.0 - clamp_eps) continue;
                           g[i] += n.g[0] * inv * (p - target->v[i]);
                       }
                   });
}

Var dice_loss_with_logits(const Var& logits, const Var& target, double smooth) {
    check_same_shape(logits, target, "dice_loss_with_logits");
    const Var probs = sigmoid(logits);
    const Var inter = sum(mul(probs, target));
    double tsum = 0;
    for (double t : target->v) tsum += t;
    const Var num = add_scalar(scale(inter, 2.0), smooth);
    const Var den = add_scalar(sum(probs), tsum + smooth);
    return add_scalar(scale(div(num, den), -1.0), 1.0);
}

}  // namespace vlseg::nn
