#include "vlseg/nn/optim.hpp"

#include <cmath>

namespace vlseg::nn {

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "adamw") return OptimizerKind::adamw;
    throw Error("unknown optimizer: " + name);
}

std::string optimizer_name(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "adamw";
}

Optimizer::Optimizer(ParamStore& store, OptimizerKind kind, double lr, double weight_decay, double beta1,
                     double beta2, double eps)
    : kind_(kind), lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (Param& p : store.params())
        if (p.trainable) params_.push_back(p.var);
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->v.size(), 0.0);
        v_[i].assign(params_[i]->v.size(), 0.0);
    }
}

void Optimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Var& p = params_[i];
        if (p->g.empty()) continue;
        auto& m = m_[i];
        auto& v = v_[i];
        for (size_t j = 0; j < p->v.size(); ++j) {
            double grad = p->g[j];
            if (kind_ == OptimizerKind::adam && weight_decay_ != 0.0)
                grad += weight_decay_ * p->v[j];  // classic L2-in-gradient
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * grad;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * grad * grad;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            double update = lr_ * mhat / (std::sqrt(vhat) + eps_);
            if (kind_ == OptimizerKind::adamw && weight_decay_ != 0.0)
                update += lr_ * weight_decay_ * p->v[j];  // decoupled decay
            p->v[j] -= update;
        }
    }
}

Optimizer::State Optimizer::state() const { return State{t_, m_, v_}; }

void Optimizer::set_state(const State& s) {
    if (s.m.size() != m_.size() || s.v.size() != v_.size()) throw Error("optimizer state size mismatch");
    t_ = s.t;
    m_ = s.m;
    v_ = s.v;
}

}  // namespace vlseg::nn
