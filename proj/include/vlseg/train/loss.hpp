#pragma once

#include <span>

#include "vlseg/nn/tensor.hpp"

namespace vlseg::train {

struct LossConfig {
    double bce_weight = 0.2;
    double dice_smooth = 1.0;
    double clamp_eps = 1e-7;
};

// Plain (graph-free) implementations. These are the reference route; the
// autodiff route in nn/ is checked against them.
double dice_loss(std::span<const double> probs, std::span<const double> target, double smooth = 1.0);
double bce_with_logits(std::span<const double> logits, std::span<const double> target,
                       double clamp_eps = 1e-7);
// dice(sigmoid(logits)) + bce_weight * bce(logits)
double combined_loss(std::span<const double> logits, std::span<const double> target,
                     const LossConfig& config = {});

// Autodiff route used by the training loop.
nn::Var combined_loss_graph(const nn::Var& logits, const nn::Var& target, const LossConfig& config = {});

}  // namespace vlseg::train
