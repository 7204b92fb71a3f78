#pragma once

#include <memory>

#include "vlseg/models/seg_model.hpp"
#include "vlseg/nn/layers.hpp"

namespace vlseg::baselines {

// Image-only encoder-decoder baseline. Ignores prompts entirely; the
// backbone is width/depth configurable so tests run at desk scale.
struct CNNConfig {
    int input_side = 32;
    int base_width = 8;
    int depth = 2;  // number of stride-2 encoder stages (== skip connections)
    uint64_t seed = 0;
    std::array<double, 3> norm_mean{0.5, 0.5, 0.5};
    std::array<double, 3> norm_std{0.25, 0.25, 0.25};
};

class UNet : public models::SegModel {
public:
    explicit UNet(const CNNConfig& config);

    nn::Var forward_logits(const Image& input, const std::string& prompt) override;

    models::InputSpec input_spec() const override;
    int output_side() const override { return config_.input_side; }
    bool uses_prompts() const override { return false; }
    std::string kind() const override { return "unet"; }
    using models::SegModel::store;
    nn::ParamStore& store() override { return store_; }

    int skip_count() const { return config_.depth; }
    const CNNConfig& config() const { return config_; }

private:
    CNNConfig config_;
    nn::ParamStore store_;
    nn::Conv2d stem_;
    std::vector<nn::Conv2d> down_, refine_;
    std::vector<nn::Conv2d> up_;
    nn::Conv2d head_;
};

std::unique_ptr<UNet> build_unet(const CNNConfig& config);

}  // namespace vlseg::baselines
