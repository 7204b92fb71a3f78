#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vlseg/common.hpp"

namespace vlseg::nn {

// Reverse-mode autodiff over dense double tensors. Graphs are built per
// forward pass and freed when the loss handle goes out of scope; leaves
// (parameters) persist and accumulate gradients until zeroed.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    std::vector<int> shape;
    std::vector<double> v;
    std::vector<double> g;  // allocated lazily
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;
    bool requires_grad = false;

    int64_t numel() const {
        int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.at(1); }

    std::vector<double>& grad_buf() {
        if (g.empty()) g.assign(v.size(), 0.0);
        return g;
    }
    void zero_grad() {
        if (!g.empty()) std::fill(g.begin(), g.end(), 0.0);
    }
};

Var make_var(std::vector<int> shape, std::vector<double> values, bool requires_grad = false);
Var make_var(std::vector<int> shape, double fill = 0.0, bool requires_grad = false);
Var scalar(double value);

// Backpropagates from a scalar root through the recorded graph.
void backward(const Var& root);

// ---- elementwise / broadcast ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var add_rowvec(const Var& a, const Var& r);  // r: [1, n]
Var mul_rowvec(const Var& a, const Var& r);

// ---- activations ----
Var relu(const Var& a);
Var gelu(const Var& a);
Var sigmoid(const Var& a);

// ---- linear algebra (2D, row-major) ----
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var softmax_rows(const Var& a);
Var layernorm_rows(const Var& a, double eps = 1e-5);
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, int c0, int c1);
Var gather_rows(const Var& table, const std::vector<int>& ids);

// ---- reductions ----
Var sum(const Var& a);
Var mean(const Var& a);

// ---- spatial ops on {C, H, W} tensors ----
Var conv2d(const Var& x, const Var& w, const Var& b, int kh, int kw, int stride, int pad);
Var upsample_nearest2x(const Var& x);
Var concat_chan(const Var& a, const Var& b);
Var tokens_to_grid(const Var& a, int h, int w);  // [h*w, D] -> {D, h, w}
Var grid_to_tokens(const Var& x);                // {C, h, w} -> [h*w, C]

// ---- losses ----
// Mean binary cross entropy from logits; probabilities clamped to
// [eps, 1-eps] before the log.
Var bce_with_logits(const Var& logits, const Var& target, double clamp_eps = 1e-7);
// Smoothed Dice loss of sigmoid(logits) against a binary target.
Var dice_loss_with_logits(const Var& logits, const Var& target, double smooth = 1.0);

}  // namespace vlseg::nn
