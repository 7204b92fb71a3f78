#pragma once

#include "vlseg/image.hpp"

namespace vlseg::evaluation {

// 2|P∩G| / (|P|+|G|) over binary masks at equal (original) resolution.
// Both masks empty -> 1.0 (agreement that nothing is there).
double dice_score(const Mask& pred, const Mask& gt);

}  // namespace vlseg::evaluation
