#pragma once

#include <map>
#include <optional>

#include "vlseg/data/registry.hpp"
#include "vlseg/prompt/sidecar.hpp"
#include "vlseg/prompt/templates.hpp"

namespace vlseg::data {

struct PromptingConfig {
    prompt::ExtractionConfig extraction;
    std::map<std::string, prompt::AttributeSet> sidecar;  // sample id -> attributes
    uint64_t seed = 0;
    // Emit a triplet for every class of the table, with an all-zero mask
    // when the class is absent in the image.
    bool emit_absent = true;
};

// One line of the prompt JSONL output.
struct PromptRecord {
    std::string sample_id;
    std::string class_name;
    prompt::PromptType ptype = prompt::PromptType::P0;
    std::string prompt;
    prompt::AttributeSet attributes;
    bool fallback = false;  // true when missing attributes forced the P1 form
};

// Attribute assembly for one expanded triplet: class keyword from the class
// name (BUSI splits it into keyword + tumor type), mask-derived number /
// size / location, sidecar extras, and for CheXlocalize the pathology list
// observed in the label mask.
prompt::AttributeSet derive_attributes(const SampleTriplet& triplet, const DatasetDescriptor& descriptor,
                                       const PromptingConfig& config,
                                       const std::vector<std::string>& present_classes = {});

// Composes the prompt for a triplet; falls back to the P1 form when the
// requested type needs attributes the sample does not have.
std::string prompt_for(const prompt::AttributeSet& attrs, const std::string& family,
                       prompt::PromptType ptype, const std::string& sample_id, uint64_t seed,
                       std::optional<uint64_t> step = std::nullopt, bool* fallback = nullptr);

// Full-split generation (the generate-prompts pipeline).
std::vector<PromptRecord> generate_prompt_records(const DatasetHandle& handle, Split split,
                                                  prompt::PromptType ptype,
                                                  const PromptingConfig& config);

// Mask-only generation for the CLI: prompts need masks and metadata, not
// pixels. `masks_dir` holds <split>/<id>.png subtrees or flat <id>.png files.
std::vector<PromptRecord> generate_prompt_records_from_masks(const DatasetDescriptor& descriptor,
                                                             const std::string& masks_dir,
                                                             prompt::PromptType ptype,
                                                             const PromptingConfig& config);

// Triplets with prompts attached, ready for training or evaluation.
std::vector<SampleTriplet> load_prompted_triplets(const DatasetHandle& handle, Split split,
                                                  prompt::PromptType ptype,
                                                  const PromptingConfig& config,
                                                  std::vector<prompt::AttributeSet>* attrs_out = nullptr);

void write_prompt_jsonl(const std::string& path, const std::vector<PromptRecord>& records);

// Literal per-sample prompts (the free-text report mode): JSON map
// {sample id -> prompt}. These bypass the template engine entirely.
std::map<std::string, std::string> load_freetext_prompts(const std::string& path);

// Replaces triplet prompts with their literal free-text entries where one
// exists; returns how many were overridden.
size_t apply_freetext_prompts(std::vector<SampleTriplet>& triplets,
                              const std::map<std::string, std::string>& freetext);

}  // namespace vlseg::data
