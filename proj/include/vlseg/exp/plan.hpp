#pragma once

#include <string>
#include <vector>

#include "vlseg/prompt/templates.hpp"

namespace vlseg::experiment {

// One finetuning run of the experiment matrix.
struct RunSpec {
    std::string model;       // vlsm variant or "unet"
    bool freeze_encoders = false;
    std::string train_data;  // dataset name, "pooled", or "endoscopy-pooled"
    prompt::PromptType ptype = prompt::PromptType::P0;
    uint64_t seed = 0;

    std::string run_id() const;
};

struct ExperimentPlan {
    std::vector<RunSpec> runs;

    // Unique run ids; test-only datasets may never appear as train data.
    void validate() const;
};

// 10 prompt types x 5 non-radiology datasets = 50 runs for one model.
ExperimentPlan non_radiology_plan(const std::string& model, uint64_t seed = 0);
// CAMUS P0-P7, BUSI and CheXlocalize P0-P6: 22 runs for one model.
ExperimentPlan radiology_plan(const std::string& model, uint64_t seed = 0);
// Pooled and endoscopy-pooled finetuning for one model and prompt type.
ExperimentPlan pooled_plan(const std::string& model, prompt::PromptType ptype, uint64_t seed = 0);

std::string plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const std::string& text);
ExperimentPlan load_plan(const std::string& path);
void save_plan(const std::string& path, const ExperimentPlan& plan);

}  // namespace vlseg::experiment
