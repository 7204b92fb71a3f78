#include "vlseg/eval/metrics.hpp"

namespace vlseg::evaluation {

double dice_score(const Mask& pred, const Mask& gt) {
    if (pred.h != gt.h || pred.w != gt.w) throw Error("dice_score: shape mismatch");
    size_t inter = 0, p = 0, g = 0;
    for (size_t i = 0; i < pred.v.size(); ++i) {
        const bool a = pred.v[i] != 0, b = gt.v[i] != 0;
        inter += (a && b);
        p += a;
        g += b;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

}  // namespace vlseg::evaluation
