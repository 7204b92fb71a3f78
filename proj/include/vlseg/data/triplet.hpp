#pragma once

#include <string>

#include "vlseg/image.hpp"

namespace vlseg::data {

// The atomic training/evaluation unit: one image, one per-class binary
// mask, and the prompt attached to that class.
struct SampleTriplet {
    std::string sample_id;
    Image image;  // H x W x 3
    Mask mask;    // H x W, matching the image
    std::string prompt;
    std::string class_name;
    std::string dataset;

    void validate() const {
        if (image.c != 3) throw Error("triplet image must have 3 channels");
        if (mask.h != image.h || mask.w != image.w)
            throw Error("triplet mask dimensions must equal image dimensions");
        for (uint8_t v : mask.v)
            if (v > 1) throw Error("triplet mask must be binary");
    }
};

}  // namespace vlseg::data
