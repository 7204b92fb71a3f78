#pragma once

#include <limits>
#include <string>

#include "vlseg/common.hpp"

namespace vlseg::train {

enum class SchedulerKind { plateau, cosine, constant };

SchedulerKind scheduler_from_name(const std::string& name);
std::string scheduler_name(SchedulerKind kind);

// Reduce-on-plateau: multiplies the rate by `factor` after `patience`
// consecutive epochs without a validation-loss improvement.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor, int patience, double min_lr = 0.0)
        : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr) {}

    // Call once per epoch with the epoch's validation loss; returns the rate
    // to use from the next epoch on.
    double step(double val_loss);

    double lr() const { return lr_; }
    int stale_epochs() const { return counter_; }
    double best() const { return best_; }

    struct State {
        double lr, best;
        int counter;
    };
    State state() const { return {lr_, best_, counter_}; }
    void set_state(const State& s) {
        lr_ = s.lr;
        best_ = s.best;
        counter_ = s.counter;
    }

private:
    double lr_;
    double factor_;
    int patience_;
    double min_lr_;
    double best_ = std::numeric_limits<double>::infinity();
    int counter_ = 0;
};

double cosine_lr(double base_lr, int epoch, int max_epochs);

// Early stopping on the validation segmentation metric (higher is better).
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    // Returns true when the metric improved.
    bool step(double val_metric);
    bool should_stop() const { return counter_ >= patience_; }
    double best() const { return best_; }
    int stale_epochs() const { return counter_; }

    struct State {
        double best;
        int counter;
    };
    State state() const { return {best_, counter_}; }
    void set_state(const State& s) {
        best_ = s.best;
        counter_ = s.counter;
    }

private:
    int patience_;
    double best_ = -std::numeric_limits<double>::infinity();
    int counter_ = 0;
};

}  // namespace vlseg::train
