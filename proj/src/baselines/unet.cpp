#include "vlseg/baselines/unet.hpp"

namespace vlseg::baselines {

UNet::UNet(const CNNConfig& config) : config_(config) {
    if (config_.depth < 1) throw Error("unet depth must be >= 1");
    if (config_.input_side % (1 << config_.depth) != 0)
        throw Error("input side must be divisible by 2^depth");
    Rng rng(derive_seed(config_.seed, "unet"));
    const int w = config_.base_width;
    stem_ = nn::Conv2d(store_, "stem", 3, w, 3, 1, 1, rng);
    int ch = w;
    for (int i = 0; i < config_.depth; ++i) {
        down_.emplace_back(store_, "down" + std::to_string(i), ch, ch * 2, 3, 2, 1, rng);
        refine_.emplace_back(store_, "refine" + std::to_string(i), ch * 2, ch * 2, 3, 1, 1, rng);
        ch *= 2;
    }
    for (int i = config_.depth - 1; i >= 0; --i) {
        // input: upsampled deep features concatenated with the skip at this level
        up_.emplace_back(store_, "up" + std::to_string(i), ch + ch / 2, ch / 2, 3, 1, 1, rng);
        ch /= 2;
    }
    head_ = nn::Conv2d(store_, "head", w, 1, 1, 1, 0, rng);
}

nn::Var UNet::forward_logits(const Image& input, const std::string&) {
    if (input.c != 3) throw Error("unet expects a 3-channel image");
    if (input.h != config_.input_side || input.w != config_.input_side)
        throw Error("unet expects a preprocessed " + std::to_string(config_.input_side) +
                    "px square input");
    nn::Var x = nn::relu(stem_(models::image_to_input(input)));
    std::vector<nn::Var> skips;
    for (int i = 0; i < config_.depth; ++i) {
        skips.push_back(x);
        x = nn::relu(down_[static_cast<size_t>(i)](x));
        x = nn::relu(refine_[static_cast<size_t>(i)](x));
    }
    for (int i = 0; i < config_.depth; ++i) {
        const nn::Var skip = skips[skips.size() - 1 - static_cast<size_t>(i)];
        x = nn::relu(up_[static_cast<size_t>(i)](nn::concat_chan(nn::upsample_nearest2x(x), skip)));
    }
    return head_(x);
}

models::InputSpec UNet::input_spec() const {
    return models::InputSpec{config_.input_side, config_.norm_mean, config_.norm_std};
}

std::unique_ptr<UNet> build_unet(const CNNConfig& config) { return std::make_unique<UNet>(config); }

}  // namespace vlseg::baselines
