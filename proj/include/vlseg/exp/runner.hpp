#pragma once

#include <memory>
#include <optional>

#include "vlseg/baselines/unet.hpp"
#include "vlseg/eval/evaluate.hpp"
#include "vlseg/exp/plan.hpp"
#include "vlseg/models/vlsm.hpp"
#include "vlseg/train/fit.hpp"

namespace vlseg::experiment {

inline constexpr const char* kVersion = "0.1.0";

struct RunnerOptions {
    std::string data_root;  // dataset layout root
    std::string out_root;   // results tree root; runs land in <out_root>/runs/<id>/
    int toy_side = 32;
    uint64_t provider_seed = 1234;
    std::optional<train::TrainConfig> train_config;  // default: recipe for the model kind
    std::string pretrained_manifest;                 // use checkpoint weights when set
    std::string sidecar_path;                        // optional attribute sidecar
    std::string freetext_prompts;                    // literal prompt map (bypasses templates)
    bool emit_absent_class = true;
    bool verbose = false;
};

struct RunOutcome {
    std::string run_id;
    std::string run_dir;
    bool skipped = false;  // already complete (checksum match)
    bool resumed = false;
    int epochs_run = 0;
    double best_val_dice = -1.0;
};

// Builds a model for a run spec (toy weights by default).
std::unique_ptr<models::SegModel> build_run_model(const RunSpec& spec, const RunnerOptions& options);

// generate -> train -> evaluate -> persist, idempotent per config checksum,
// resumable from the last epoch checkpoint.
RunOutcome run_one(const RunSpec& spec, const RunnerOptions& options);
std::vector<RunOutcome> run_plan(const ExperimentPlan& plan, const RunnerOptions& options);

// Aggregates the results tree into finetuning tables and per-dataset
// prompt-type charts.
void write_report(const std::string& out_root);

// Markdown matrix in the cross-dataset table layout; "-" for absent cells.
std::string cross_matrix_markdown(const evaluation::CrossDatasetMatrix& matrix);
void write_cross_matrix(const std::string& out_root, const evaluation::CrossDatasetMatrix& matrix);

}  // namespace vlseg::experiment
