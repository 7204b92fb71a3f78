#pragma once

#include <vector>

#include "vlseg/nn/layers.hpp"

namespace vlseg::nn {

enum class OptimizerKind { adam, adamw };

OptimizerKind optimizer_from_name(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

// Adam / AdamW over the trainable subset of a parameter store. Frozen
// parameters are never touched, including by the decoupled weight decay.
class Optimizer {
public:
    Optimizer(ParamStore& store, OptimizerKind kind, double lr, double weight_decay, double beta1 = 0.9,
              double beta2 = 0.999, double eps = 1e-8);

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    void step();
    int64_t steps_taken() const { return t_; }

    // Moment buffers for exact training resume.
    struct State {
        int64_t t = 0;
        std::vector<std::vector<double>> m, v;
    };
    State state() const;
    void set_state(const State& s);

private:
    std::vector<Var> params_;
    OptimizerKind kind_;
    double lr_, weight_decay_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace vlseg::nn
