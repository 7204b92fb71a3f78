#pragma once

#include <cstdint>
#include <vector>

#include "vlseg/common.hpp"

namespace vlseg {

// Interleaved float image, values in [0,1], row-major, c channels.
struct Image {
    int h = 0;
    int w = 0;
    int c = 0;
    std::vector<float> data;

    Image() = default;
    Image(int h_, int w_, int c_, float fill = 0.f)
        : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, fill) {}

    float& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    bool empty() const { return h == 0 || w == 0; }
};

// Binary mask, values in {0,1}.
struct Mask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v;

    Mask() = default;
    Mask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    bool empty() const { return h == 0 || w == 0; }
    size_t foreground() const {
        size_t n = 0;
        for (uint8_t x : v) n += (x != 0);
        return n;
    }
};

// Label-indexed mask for multi-class datasets (0 = background).
struct LabelMask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> v;

    LabelMask() = default;
    LabelMask(int h_, int w_, uint8_t fill = 0) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

// Single-channel float map (logits or probabilities) at some resolution.
struct FloatMap {
    int h = 0;
    int w = 0;
    std::vector<float> v;

    FloatMap() = default;
    FloatMap(int h_, int w_, float fill = 0.f) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    float& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    float at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

Image resize_bilinear(const Image& src, int out_h, int out_w);
FloatMap resize_bilinear(const FloatMap& src, int out_h, int out_w);

}  // namespace vlseg
