#pragma once

#include <memory>
#include <vector>

#include "vlseg/models/seg_model.hpp"
#include "vlseg/models/tokenizer.hpp"
#include "vlseg/nn/layers.hpp"
#include "vlseg/nn/serialize.hpp"

namespace vlseg::models {

enum class Conditioning { sentence_level, token_level };

Conditioning conditioning_from_name(const std::string& name);
std::string conditioning_name(Conditioning c);

namespace variant {
inline constexpr const char* clipseg = "clipseg";
inline constexpr const char* cris = "cris";
inline constexpr const char* biomedclipseg = "biomedclipseg";
inline constexpr const char* biomedclipseg_d = "biomedclipseg_d";
}  // namespace variant

const std::vector<std::string>& all_variants();

struct VLSMConfig {
    std::string variant = variant::clipseg;
    Conditioning conditioning = Conditioning::sentence_level;

    int input_side = 352;
    int context_len = 77;
    int vocab_size = 512;

    int text_dim = 32;
    int text_layers = 2;
    int text_heads = 4;
    int joint_dim = 32;

    int patch = 8;
    int vision_dim = 32;
    int vision_layers = 2;
    int vision_heads = 4;
    std::vector<int> extract_depths = {1, 2};  // 1-based block indices

    int decoder_dim = 16;
    int decoder_heads = 4;

    bool freeze_text = false;
    bool freeze_image = false;

    std::array<double, 3> norm_mean{0.48145466, 0.4578275, 0.40821073};
    std::array<double, 3> norm_std{0.26862954, 0.26130258, 0.27577711};

    int grid_side() const { return input_side / patch; }
    int output_side() const { return grid_side() * 2; }

    void validate() const;
};

// Per-variant defaults at pretrained scale (input side, conditioning).
VLSMConfig default_config(const std::string& variant_name);
// Desk-scale configuration used by tests and the synthetic experiments.
VLSMConfig toy_config(const std::string& variant_name, int input_side = 32);

// Supplies initial weights per component. Components are "text_encoder",
// "vision_encoder" and "decoder" (the decoder component includes the
// aggregator, mirroring what a decoder checkpoint carries).
class WeightsProvider {
public:
    virtual ~WeightsProvider() = default;
    virtual uint64_t init_seed(const std::string& component, const VLSMConfig& config) const = 0;
    virtual void post_load(const std::string& /*component*/, nn::ParamStore& /*store*/,
                           const VLSMConfig& /*config*/) const {}
};

// Seeded random weights. Encoder streams depend only on the backbone
// (CLIP vs BiomedCLIP), so biomedclipseg and biomedclipseg_d share encoder
// weights; the clipseg decoder stream doubles as the "pretrained" decoder
// copied into biomedclipseg_d, while biomedclipseg draws a fresh one.
class ToyWeightsProvider : public WeightsProvider {
public:
    explicit ToyWeightsProvider(uint64_t seed) : seed_(seed) {}
    uint64_t init_seed(const std::string& component, const VLSMConfig& config) const override;

private:
    uint64_t seed_;
};

// Loads component weights from checkpoint files listed in a JSON manifest:
// {"text_encoder": {"file": "..."}, ...}. Fails naming the component when
// an entry or file is absent.
class CheckpointWeightsProvider : public WeightsProvider {
public:
    explicit CheckpointWeightsProvider(const std::string& manifest_path);
    uint64_t init_seed(const std::string& component, const VLSMConfig& config) const override;
    void post_load(const std::string& component, nn::ParamStore& store,
                   const VLSMConfig& config) const override;

private:
    std::string manifest_dir_;
    std::map<std::string, std::string> files_;
    std::map<std::string, std::string> hashes_;  // optional integrity checks
};

struct TextEncoding {
    nn::Var tokens;  // [L, text_dim]
    nn::Var pooled;  // [1, joint_dim]
    std::vector<int> ids;
    bool truncated = false;
};

struct VisionFeatures {
    nn::Var final_map;           // [T, vision_dim]
    std::vector<nn::Var> skips;  // one per configured extraction depth
    int grid_h = 0, grid_w = 0;
};

struct ConditionedStack {
    std::vector<nn::Var> features;  // [T, vision_dim] each
    int grid_h = 0, grid_w = 0;
};

class VLSM : public SegModel {
public:
    VLSM(VLSMConfig config, const WeightsProvider& provider);

    TextEncoding encode_text(const std::string& prompt) const;
    VisionFeatures encode_image(const Image& input) const;
    ConditionedStack aggregate(const VisionFeatures& vision, const TextEncoding& text) const;
    nn::Var decode(const ConditionedStack& stack) const;

    nn::Var forward_logits(const Image& input, const std::string& prompt) override;

    InputSpec input_spec() const override;
    int output_side() const override { return config_.output_side(); }
    bool uses_prompts() const override { return true; }
    std::string kind() const override { return config_.variant; }

    using SegModel::store;
    nn::ParamStore& store() override { return store_; }
    const VLSMConfig& config() const { return config_; }
    const HashTokenizer& tokenizer() const { return tokenizer_; }

private:
    VLSMConfig config_;
    HashTokenizer tokenizer_;
    nn::ParamStore store_;

    // text encoder
    nn::Var tok_embed_, text_pos_;
    std::vector<nn::TransformerBlock> text_blocks_;
    nn::LayerNorm text_ln_;
    nn::Linear text_pool_;

    // vision encoder
    nn::Linear patch_embed_;
    nn::Var vision_pos_;
    std::vector<nn::TransformerBlock> vision_blocks_;
    nn::LayerNorm vision_ln_;

    // decoder component (aggregator + decoder head)
    std::vector<nn::Linear> film_scale_, film_shift_;
    nn::MultiHeadAttention cross_attn_;
    std::vector<nn::Linear> stack_proj_;
    nn::TransformerBlock decoder_block_;
    nn::LayerNorm decoder_ln_;
    nn::Conv2d decoder_conv_;
    nn::Conv2d decoder_head_;
};

std::unique_ptr<VLSM> build_variant(const VLSMConfig& config, const WeightsProvider& provider);

// Writes one checkpoint file per component plus a manifest, producing
// inputs for CheckpointWeightsProvider.
void export_component_checkpoints(const VLSM& model, const std::string& dir,
                                  const std::string& manifest_path);

}  // namespace vlseg::models
