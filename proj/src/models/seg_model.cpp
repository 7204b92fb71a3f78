#include "vlseg/models/seg_model.hpp"

namespace vlseg::models {

nn::Var image_to_input(const Image& input) {
    if (input.c != 3) throw Error("expected a 3-channel image");
    std::vector<double> chw(static_cast<size_t>(3) * input.h * input.w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < input.h; ++y)
            for (int x = 0; x < input.w; ++x)
                chw[(static_cast<size_t>(c) * input.h + y) * input.w + x] = input.at(y, x, c);
    return nn::make_var({3, input.h, input.w}, std::move(chw));
}

}  // namespace vlseg::models
