#pragma once

#include "vlseg/eval/evaluate.hpp"
#include "vlseg/robustness/perturb.hpp"

namespace vlseg::robustness {

struct PerturbationResult {
    PerturbationSpec spec;
    evaluation::EvalReport base;
    evaluation::EvalReport perturbed;
    // (perturbed_mean - base_mean) / base_mean * 100; when base_mean is 0
    // the change is reported absolutely and flagged.
    double change = 0.0;
    bool absolute = false;
};

struct SuiteOptions {
    uint64_t compose_seed = 0;  // must match the seed the base prompts used
    std::string out_dir;        // when set: CSV + chart + worst-drop gallery
    int gallery_count = 4;
};

struct SuiteResult {
    evaluation::EvalReport base;
    std::vector<PerturbationResult> results;
};

// Evaluates the model once with base prompts and once per spec with
// perturbed prompts; reports the relative Dice change per (attribute, mode).
SuiteResult run_perturbation_suite(models::SegModel& model,
                                   const std::vector<data::SampleTriplet>& triplets,
                                   const std::vector<prompt::AttributeSet>& attrs,
                                   const std::string& family, prompt::PromptType ptype,
                                   const std::vector<PerturbationSpec>& specs,
                                   const SuiteOptions& options = {});

// Default spec list: random_word / opposite / swap for every attribute the
// family's template uses at this prompt type, plus identity and
// class_name_only probes.
std::vector<PerturbationSpec> default_specs(const std::string& family, prompt::PromptType ptype,
                                            const std::vector<prompt::AttributeSet>& attrs,
                                            uint64_t seed);

std::vector<PerturbationSpec> load_suite_config(const std::string& path);

}  // namespace vlseg::robustness
