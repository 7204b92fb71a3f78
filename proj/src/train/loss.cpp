#include "vlseg/train/loss.hpp"

#include <algorithm>
#include <cmath>

namespace vlseg::train {

double dice_loss(std::span<const double> probs, std::span<const double> target, double smooth) {
    if (probs.size() != target.size()) throw Error("dice_loss: shape mismatch");
    double inter = 0, psum = 0, tsum = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        inter += probs[i] * target[i];
        psum += probs[i];
        tsum += target[i];
    }
    return 1.0 - (2.0 * inter + smooth) / (psum + tsum + smooth);
}

double bce_with_logits(std::span<const double> logits, std::span<const double> target, double clamp_eps) {
    if (logits.size() != target.size()) throw Error("bce_with_logits: shape mismatch");
    double total = 0;
    for (size_t i = 0; i < logits.size(); ++i) {
        double p = 1.0 / (1.0 + std::exp(-logits[i]));
        p = std::clamp(p, clamp_eps, 1.0 - clamp_eps);
        total -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(logits.size());
}

double combined_loss(std::span<const double> logits, std::span<const double> target,
                     const LossConfig& config) {
    std::vector<double> probs(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) probs[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    return dice_loss(probs, target, config.dice_smooth) +
           config.bce_weight * bce_with_logits(logits, target, config.clamp_eps);
}

nn::Var combined_loss_graph(const nn::Var& logits, const nn::Var& target, const LossConfig& config) {
    const nn::Var dice = nn::dice_loss_with_logits(logits, target, config.dice_smooth);
    if (config.bce_weight == 0.0) return dice;
    return nn::add(dice, nn::scale(nn::bce_with_logits(logits, target, config.clamp_eps),
                                   config.bce_weight));
}

}  // namespace vlseg::train
