#pragma once

#include <functional>
#include <optional>

#include "vlseg/data/triplet.hpp"
#include "vlseg/models/seg_model.hpp"
#include "vlseg/nn/optim.hpp"
#include "vlseg/train/loss.hpp"
#include "vlseg/train/schedule.hpp"

namespace vlseg::train {

struct TrainConfig {
    double bce_weight = 0.2;
    double dice_smooth = 1.0;
    nn::OptimizerKind optimizer = nn::OptimizerKind::adamw;
    double weight_decay = 1e-3;
    double lr = 2e-3;
    SchedulerKind scheduler = SchedulerKind::plateau;
    int plateau_patience = 5;
    double plateau_factor = 0.1;
    double min_lr = 0.0;
    int early_stop_patience = 50;
    int batch_size = 128;
    int max_epochs = 100;
    uint64_t seed = 0;

    void validate() const;
    LossConfig loss() const { return LossConfig{bce_weight, dice_smooth, 1e-7}; }
};

// Finetuning recipe per model family: clipseg-family models use lr 2e-3,
// batch 128, early-stop patience 50; cris uses lr 2e-5, batch 32,
// patience 10. The image-only baseline trains with Dice loss only under
// Adam, lr 1e-3, zero weight decay.
TrainConfig config_for_model(const std::string& kind);

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);
TrainConfig load_train_config(const std::string& path);

// The hyperparameter search space explored around the recipe.
struct HyperGrid {
    std::vector<nn::OptimizerKind> optimizers = {nn::OptimizerKind::adam, nn::OptimizerKind::adamw};
    std::pair<double, double> lr_range = {1e-5, 1e-2};
    std::vector<int> lr_points_per_decade = {1};
    std::vector<int> batch_sizes = {16, 32, 64, 128};
    std::vector<SchedulerKind> schedulers = {SchedulerKind::cosine, SchedulerKind::constant,
                                             SchedulerKind::plateau};

    std::vector<TrainConfig> enumerate(const TrainConfig& base) const;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0;
    double train_loss = 0;
    double val_loss = 0;
    double val_dice = 0;
};

struct TrainState {
    int epoch = 0;
    double lr = 0;
    double best_val_dice = -1.0;
    int best_epoch = 0;
    PlateauScheduler::State plateau{0, 0, 0};
    EarlyStopper::State early{0, 0};
    std::vector<EpochRecord> history;
};

// Thrown when the loss turns non-finite; carries epoch/batch/lr context.
struct TrainAbort : Error {
    TrainAbort(const std::string& msg, int epoch, int batch, double lr)
        : Error(msg + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                ", lr " + std::to_string(lr) + ")"),
          epoch(epoch),
          batch(batch),
          lr(lr) {}
    int epoch, batch;
    double lr;
};

struct FitOptions {
    // Regenerates a sample's prompt each step (training-time description
    // re-randomization). Default: use the stored prompt.
    std::function<std::string(const data::SampleTriplet&, int epoch, size_t index)> prompt_fn;
    // Called after every epoch (checkpointing hook).
    std::function<void(const TrainState&, const nn::Optimizer&, models::SegModel&)> on_epoch;
    // Resume from a previous state (model parameters must already be loaded).
    std::optional<TrainState> resume_state;
    std::optional<nn::Optimizer::State> resume_optimizer;
    bool verbose = false;
};

struct FitResult {
    TrainState state;
    int best_epoch = 0;
    double best_val_dice = -1.0;
    bool early_stopped = false;
};

// AdamW/Adam over shuffled batches. After each epoch: validation loss and
// Dice; reduce-on-plateau on val loss; early stop on val Dice; the model
// ends at the best-val-Dice parameters.
FitResult fit(models::SegModel& model, const std::vector<data::SampleTriplet>& train_split,
              const std::vector<data::SampleTriplet>& val_split, const TrainConfig& config,
              const FitOptions& options = {});

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace vlseg::train
