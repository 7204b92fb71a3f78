#include "vlseg/image.hpp"

#include <algorithm>
#include <cmath>

namespace vlseg {

namespace {

// Align-corners-false bilinear sampling, matching the usual framework default.
inline float src_coord(int dst, int dst_size, int src_size) {
    if (dst_size == 1) return 0.f;
    const float scale = static_cast<float>(src_size) / dst_size;
    float s = (dst + 0.5f) * scale - 0.5f;
    return std::max(0.f, std::min(s, static_cast<float>(src_size - 1)));
}

}  // namespace

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    if (src.empty()) throw Error("resize_bilinear: empty image");
    Image dst(out_h, out_w, src.c);
    for (int y = 0; y < out_h; ++y) {
        const float sy = src_coord(y, out_h, src.h);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src.h - 1);
        const float fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const float sx = src_coord(x, out_w, src.w);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src.w - 1);
            const float fx = sx - x0;
            for (int ch = 0; ch < src.c; ++ch) {
                const float top = src.at(y0, x0, ch) * (1 - fx) + src.at(y0, x1, ch) * fx;
                const float bot = src.at(y1, x0, ch) * (1 - fx) + src.at(y1, x1, ch) * fx;
                dst.at(y, x, ch) = top * (1 - fy) + bot * fy;
            }
        }
    }
    return dst;
}

FloatMap resize_bilinear(const FloatMap& src, int out_h, int out_w) {
    if (src.h == 0 || src.w == 0) throw Error("resize_bilinear: empty map");
    FloatMap dst(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const float sy = src_coord(y, out_h, src.h);
        const int y0 = static_cast<int>(sy);
        const int y1 = std::min(y0 + 1, src.h - 1);
        const float fy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const float sx = src_coord(x, out_w, src.w);
            const int x0 = static_cast<int>(sx);
            const int x1 = std::min(x0 + 1, src.w - 1);
            const float fx = sx - x0;
            const float top = src.at(y0, x0) * (1 - fx) + src.at(y0, x1) * fx;
            const float bot = src.at(y1, x0) * (1 - fx) + src.at(y1, x1) * fx;
            dst.at(y, x) = top * (1 - fy) + bot * fy;
        }
    }
    return dst;
}

}  // namespace vlseg
