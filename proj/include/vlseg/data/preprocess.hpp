#pragma once

#include "vlseg/image.hpp"
#include "vlseg/models/seg_model.hpp"

namespace vlseg::data {

// Bilinear resize to the model's square input followed by per-channel
// standardization. The only preprocessing applied anywhere.
Image preprocess(const Image& image, const models::InputSpec& spec);

// Bilinearly resizes a model-resolution logit map back to the original
// image size (done before thresholding).
FloatMap restore(const FloatMap& logits, int orig_h, int orig_w);

// sigmoid then strict > 0.5
Mask threshold_logits(const FloatMap& logits);

}  // namespace vlseg::data
