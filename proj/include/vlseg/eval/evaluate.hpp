#pragma once

#include <functional>
#include <map>

#include "vlseg/data/prompting.hpp"
#include "vlseg/eval/metrics.hpp"
#include "vlseg/models/seg_model.hpp"

namespace vlseg::evaluation {

struct GroupKey {
    std::string model;
    std::string train_data;  // "zero-shot" when not finetuned
    std::string test_data;
    std::string ptype;
    std::string perturbation;  // empty when unperturbed
};

// Per-sample Dice scores under one grouping key. Mean and std are reported
// x100; per-image averaging, never pixel pooling.
struct EvalReport {
    GroupKey key;
    std::vector<double> per_sample;  // dice in [0,1], deterministic sample order

    size_t count() const { return per_sample.size(); }
    double mean_x100() const;
    double std_x100() const;  // population standard deviation
};

// preprocess -> forward -> restore logits to the original size -> sigmoid
// -> threshold strictly above 0.5.
Mask predict_mask(models::SegModel& model, const data::SampleTriplet& sample);
FloatMap predict_logits(models::SegModel& model, const data::SampleTriplet& sample);

// Rewrites a sample's prompt before evaluation (perturbation hook).
using PromptRewriter = std::function<std::string(const data::SampleTriplet&)>;

EvalReport evaluate_triplets(models::SegModel& model, const std::vector<data::SampleTriplet>& triplets,
                             GroupKey key, const PromptRewriter& rewrite = nullptr);

// Generates prompts for the split, then evaluates every triplet.
EvalReport evaluate(models::SegModel& model, const data::DatasetHandle& handle, data::Split split,
                    prompt::PromptType ptype, const data::PromptingConfig& prompting, GroupKey key = {},
                    const PromptRewriter& rewrite = nullptr);

struct CrossDatasetMatrix {
    std::vector<std::string> train_names;
    std::vector<std::string> test_names;
    std::map<std::pair<std::string, std::string>, EvalReport> cells;

    // a cell is in-distribution when train and test dataset coincide
    bool in_distribution(const std::string& train, const std::string& test) const {
        return train == test;
    }
    const EvalReport& at(const std::string& train, const std::string& test) const;
};

// One finetuned model per training dataset, evaluated on every test handle.
CrossDatasetMatrix cross_dataset_eval(
    const std::map<std::string, models::SegModel*>& models_by_train_dataset,
    const std::vector<std::shared_ptr<data::DatasetHandle>>& test_handles, data::Split split,
    prompt::PromptType ptype, const data::PromptingConfig& prompting);

}  // namespace vlseg::evaluation
