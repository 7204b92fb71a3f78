#pragma once

#include <array>
#include <string>

#include "vlseg/image.hpp"
#include "vlseg/nn/layers.hpp"

namespace vlseg::models {

// Preprocessing contract of a model: fixed input side and per-channel
// normalization statistics.
struct InputSpec {
    int side = 0;
    std::array<double, 3> mean{0.5, 0.5, 0.5};
    std::array<double, 3> stdev{0.25, 0.25, 0.25};
};

// Common surface of the prompt-conditioned models and the image-only
// baselines: a normalized input (and possibly a prompt) in, a one-channel
// logit map out.
class SegModel {
public:
    virtual ~SegModel() = default;

    // `input` must already be preprocessed to spec (side x side, normalized).
    virtual nn::Var forward_logits(const Image& input, const std::string& prompt) = 0;

    virtual InputSpec input_spec() const = 0;
    virtual int output_side() const = 0;
    virtual bool uses_prompts() const = 0;
    virtual std::string kind() const = 0;

    virtual nn::ParamStore& store() = 0;
    const nn::ParamStore& store() const { return const_cast<SegModel*>(this)->store(); }
};

// Normalized {3, side, side} constant input node from a preprocessed image.
nn::Var image_to_input(const Image& input);

}  // namespace vlseg::models
