#include "vlseg/data/preprocess.hpp"

#include <cmath>

namespace vlseg::data {

Image preprocess(const Image& image, const models::InputSpec& spec) {
    if (image.c != 3) throw Error("preprocess expects a 3-channel image");
    Image resized = resize_bilinear(image, spec.side, spec.side);
    for (int y = 0; y < resized.h; ++y)
        for (int x = 0; x < resized.w; ++x)
            for (int c = 0; c < 3; ++c)
                resized.at(y, x, c) = static_cast<float>(
                    (resized.at(y, x, c) - spec.mean[static_cast<size_t>(c)]) /
                    spec.stdev[static_cast<size_t>(c)]);
    return resized;
}

FloatMap restore(const FloatMap& logits, int orig_h, int orig_w) {
    return resize_bilinear(logits, orig_h, orig_w);
}

Mask threshold_logits(const FloatMap& logits) {
    Mask m(logits.h, logits.w);
    for (size_t i = 0; i < logits.v.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(logits.v[i])));
        m.v[i] = p > 0.5 ? 1 : 0;
    }
    return m;
}

}  // namespace vlseg::data
