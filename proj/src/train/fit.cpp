#include "vlseg/train/fit.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "vlseg/data/preprocess.hpp"
#include "vlseg/eval/metrics.hpp"

namespace vlseg::train {

using nlohmann::json;

void TrainConfig::validate() const {
    if (bce_weight < 0 || dice_smooth < 0) throw Error("loss weights must be non-negative");
    if (lr <= 0) throw Error("learning rate must be positive");
    if (weight_decay < 0) throw Error("weight decay must be non-negative");
    if (plateau_factor <= 0 || plateau_factor >= 1) throw Error("plateau factor must be in (0,1)");
    if (plateau_patience <= 0 || early_stop_patience <= 0) throw Error("patience must be positive");
    if (batch_size <= 0 || max_epochs <= 0) throw Error("batch size and max epochs must be positive");
}

TrainConfig config_for_model(const std::string& kind) {
    TrainConfig cfg;
    if (kind == "cris") {
        cfg.lr = 2e-5;
        cfg.early_stop_patience = 10;
        cfg.batch_size = 32;
    } else if (kind == "unet" || kind == "cnn") {
        cfg.optimizer = nn::OptimizerKind::adam;
        cfg.lr = 1e-3;
        cfg.weight_decay = 0.0;
        cfg.bce_weight = 0.0;  // Dice loss only
    }
    // clipseg / biomedclipseg / biomedclipseg_d keep the defaults
    // (adamw, lr 2e-3, batch 128, early-stop patience 50).
    return cfg;
}

std::string train_config_to_json(const TrainConfig& c) {
    json j;
    j["bce_weight"] = c.bce_weight;
    j["dice_smooth"] = c.dice_smooth;
    j["optimizer"] = nn::optimizer_name(c.optimizer);
    j["weight_decay"] = c.weight_decay;
    j["lr"] = c.lr;
    j["scheduler"] = scheduler_name(c.scheduler);
    j["plateau_patience"] = c.plateau_patience;
    j["plateau_factor"] = c.plateau_factor;
    j["min_lr"] = c.min_lr;
    j["early_stop_patience"] = c.early_stop_patience;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["seed"] = c.seed;
    return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
    const json j = json::parse(text);
    TrainConfig c;
    c.bce_weight = j.value("bce_weight", c.bce_weight);
    c.dice_smooth = j.value("dice_smooth", c.dice_smooth);
    if (j.contains("optimizer")) c.optimizer = nn::optimizer_from_name(j.at("optimizer"));
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.lr = j.value("lr", c.lr);
    if (j.contains("scheduler")) c.scheduler = scheduler_from_name(j.at("scheduler"));
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open train config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return train_config_from_json(text);
}

std::vector<TrainConfig> HyperGrid::enumerate(const TrainConfig& base) const {
    std::vector<double> lrs;
    for (double lr = lr_range.first; lr <= lr_range.second * 1.0000001; lr *= 10.0) lrs.push_back(lr);
    std::vector<TrainConfig> out;
    for (nn::OptimizerKind opt : optimizers)
        for (double lr : lrs)
            for (int bs : batch_sizes)
                for (SchedulerKind sched : schedulers) {
                    TrainConfig c = base;
                    c.optimizer = opt;
                    c.lr = lr;
                    c.batch_size = bs;
                    c.scheduler = sched;
                    out.push_back(c);
                }
    return out;
}

namespace {

FloatMap mask_to_floatmap(const Mask& m) {
    FloatMap f(m.h, m.w);
    for (size_t i = 0; i < m.v.size(); ++i) f.v[i] = m.v[i] ? 1.f : 0.f;
    return f;
}

FloatMap logits_to_floatmap(const nn::Var& logits) {
    if (logits->shape.size() != 3 || logits->shape[0] != 1)
        throw Error("expected a {1,H,W} logit map");
    FloatMap f(logits->shape[1], logits->shape[2]);
    for (size_t i = 0; i < f.v.size(); ++i) f.v[i] = static_cast<float>(logits->v[i]);
    return f;
}

}  // namespace

FitResult fit(models::SegModel& model, const std::vector<data::SampleTriplet>& train_split,
              const std::vector<data::SampleTriplet>& val_split, const TrainConfig& config,
              const FitOptions& options) {
    config.validate();
    if (train_split.empty() || val_split.empty()) throw Error("fit requires non-empty train/val splits");

    const models::InputSpec spec = model.input_spec();
    const int out_side = model.output_side();

    // preprocessed inputs and model-resolution soft targets, fixed per run
    auto prep = [&](const std::vector<data::SampleTriplet>& split) {
        std::vector<Image> inputs;
        std::vector<std::vector<double>> targets;
        inputs.reserve(split.size());
        for (const auto& s : split) {
            inputs.push_back(data::preprocess(s.image, spec));
            const FloatMap t = resize_bilinear(mask_to_floatmap(s.mask), out_side, out_side);
            targets.emplace_back(t.v.begin(), t.v.end());
        }
        return std::pair(std::move(inputs), std::move(targets));
    };
    auto [train_inputs, train_targets] = prep(train_split);
    auto [val_inputs, val_targets] = prep(val_split);

    nn::ParamStore& store = model.store();
    nn::Optimizer optimizer(store, config.optimizer, config.lr, config.weight_decay);
    PlateauScheduler plateau(config.lr, config.plateau_factor, config.plateau_patience, config.min_lr);
    EarlyStopper early(config.early_stop_patience);

    TrainState state;
    state.lr = config.lr;
    if (options.resume_state) {
        state = *options.resume_state;
        plateau.set_state(state.plateau);
        early.set_state(state.early);
    }
    if (options.resume_optimizer) optimizer.set_state(*options.resume_optimizer);

    auto best_params = store.snapshot();
    FitResult result;
    result.best_epoch = state.best_epoch;
    result.best_val_dice = state.best_val_dice;

    const LossConfig loss_cfg = config.loss();
    const size_t n = train_split.size();

    for (int epoch = state.epoch + 1; epoch <= config.max_epochs; ++epoch) {
        double lr_epoch = state.lr;
        if (config.scheduler == SchedulerKind::cosine)
            lr_epoch = cosine_lr(config.lr, epoch, config.max_epochs);
        optimizer.set_lr(lr_epoch);

        // shuffle is a pure function of (epoch, seed)
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(config.seed, "epoch" + std::to_string(epoch)));
        for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng() % i]);

        double loss_sum = 0;
        int batch_index = 0;
        for (size_t start = 0; start < n; start += static_cast<size_t>(config.batch_size), ++batch_index) {
            const size_t stop = std::min(n, start + static_cast<size_t>(config.batch_size));
            store.zero_grad();
            nn::Var total;
            for (size_t k = start; k < stop; ++k) {
                const size_t idx = order[k];
                const auto& sample = train_split[idx];
                const std::string prompt =
                    options.prompt_fn ? options.prompt_fn(sample, epoch, idx) : sample.prompt;
                nn::Var logits = model.forward_logits(train_inputs[idx], prompt);
                nn::Var target = nn::make_var(logits->shape, train_targets[idx]);
                nn::Var loss = combined_loss_graph(logits, target, loss_cfg);
                total = total ? nn::add(total, loss) : loss;
            }
            nn::Var batch_loss = nn::scale(total, 1.0 / static_cast<double>(stop - start));
            if (!std::isfinite(batch_loss->v[0]))
                throw TrainAbort("non-finite training loss", epoch, batch_index, lr_epoch);
            nn::backward(batch_loss);
            optimizer.step();
            loss_sum += batch_loss->v[0] * static_cast<double>(stop - start);
        }

        // validation pass (values only, no parameter updates)
        double val_loss = 0, val_dice = 0;
        for (size_t i = 0; i < val_split.size(); ++i) {
            const auto& sample = val_split[i];
            nn::Var logits = model.forward_logits(val_inputs[i], sample.prompt);
            val_loss += combined_loss(std::span(logits->v), std::span(val_targets[i]), loss_cfg);
            const FloatMap restored =
                data::restore(logits_to_floatmap(logits), sample.mask.h, sample.mask.w);
            val_dice += evaluation::dice_score(data::threshold_logits(restored), sample.mask);
        }
        val_loss /= static_cast<double>(val_split.size());
        val_dice /= static_cast<double>(val_split.size());

        EpochRecord rec{epoch, lr_epoch, loss_sum / static_cast<double>(n), val_loss, val_dice};
        state.history.push_back(rec);
        state.epoch = epoch;

        if (config.scheduler == SchedulerKind::plateau) state.lr = plateau.step(val_loss);
        state.plateau = plateau.state();

        if (early.step(val_dice)) {
            best_params = store.snapshot();
            state.best_val_dice = val_dice;
            state.best_epoch = epoch;
            result.best_epoch = epoch;
            result.best_val_dice = val_dice;
        }
        state.early = early.state();

        if (options.verbose)
            std::cerr << "epoch " << epoch << " lr " << lr_epoch << " train " << rec.train_loss
                      << " val " << val_loss << " dice " << val_dice << "\n";
        if (options.on_epoch) options.on_epoch(state, optimizer, model);
        if (early.should_stop()) {
            result.early_stopped = true;
            break;
        }
    }

    store.restore(best_params);  // checkpoint selection: best validation Dice
    result.state = std::move(state);
    return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write history: " + path);
    out << "epoch,lr,train_loss,val_loss,val_dice\n";
    for (const EpochRecord& r : history)
        out << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.val_loss << "," << r.val_dice
            << "\n";
}

}  // namespace vlseg::train
