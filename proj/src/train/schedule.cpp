#include "vlseg/train/schedule.hpp"

#include <cmath>

namespace vlseg::train {

SchedulerKind scheduler_from_name(const std::string& name) {
    if (name == "plateau") return SchedulerKind::plateau;
    if (name == "cosine") return SchedulerKind::cosine;
    if (name == "constant") return SchedulerKind::constant;
    throw Error("unknown scheduler: " + name);
}

std::string scheduler_name(SchedulerKind kind) {
    switch (kind) {
        case SchedulerKind::plateau: return "plateau";
        case SchedulerKind::cosine: return "cosine";
        case SchedulerKind::constant: return "constant";
    }
    return "constant";
}

double PlateauScheduler::step(double val_loss) {
    if (val_loss < best_) {
        best_ = val_loss;
        counter_ = 0;
    } else {
        ++counter_;
        if (counter_ >= patience_) {
            lr_ = std::max(lr_ * factor_, min_lr_);
            counter_ = 0;
        }
    }
    return lr_;
}

double cosine_lr(double base_lr, int epoch, int max_epochs) {
    if (max_epochs <= 1) return base_lr;
    const double t = static_cast<double>(epoch - 1) / static_cast<double>(max_epochs - 1);
    return 0.5 * base_lr * (1.0 + std::cos(M_PI * t));
}

bool EarlyStopper::step(double val_metric) {
    if (val_metric > best_) {
        best_ = val_metric;
        counter_ = 0;
        return true;
    }
    ++counter_;
    return false;
}

}  // namespace vlseg::train
