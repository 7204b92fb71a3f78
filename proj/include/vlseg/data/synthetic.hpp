#pragma once

#include "vlseg/data/descriptor.hpp"
#include "vlseg/data/triplet.hpp"
#include "vlseg/prompt/attributes.hpp"
#include "vlseg/prompt/templates.hpp"

namespace vlseg::data {

// Bright disc on a dark background, prompted with mask-derived attributes
// through the regular template engine.
struct BlobOptions {
    int count = 8;
    int side = 32;
    uint64_t seed = 0;
    prompt::PromptType ptype = prompt::PromptType::P6;
};

std::vector<SampleTriplet> make_blob_dataset(const BlobOptions& options);

// The location word alone decides which quadrant is foreground: the image
// carries no quadrant cue beyond light noise, so only a prompt-reading
// model can solve held-out samples.
struct QuadrantOptions {
    int count = 64;
    int side = 32;
    uint64_t seed = 0;
    double noise = 0.05;
};

struct QuadrantSample {
    SampleTriplet triplet;
    prompt::AttributeSet attrs;
    std::string quadrant;  // "top left", "top right", "bottom left", "bottom right"
};

std::vector<QuadrantSample> make_quadrant_dataset(const QuadrantOptions& options);

// Materializes synthetic blob samples in the on-disk dataset layout so the
// registry and the CLI can run without the real datasets.
void write_synthetic_dataset(const std::string& root, const DatasetDescriptor& descriptor,
                             const std::array<int, 3>& counts, int side, uint64_t seed);

}  // namespace vlseg::data
