#include "vlseg/models/vlsm.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace vlseg::models {

namespace fs = std::filesystem;
using nlohmann::json;

Conditioning conditioning_from_name(const std::string& name) {
    if (name == "sentence_level") return Conditioning::sentence_level;
    if (name == "token_level") return Conditioning::token_level;
    throw Error("unknown conditioning mode: " + name);
}

std::string conditioning_name(Conditioning c) {
    return c == Conditioning::sentence_level ? "sentence_level" : "token_level";
}

const std::vector<std::string>& all_variants() {
    static const std::vector<std::string> v = {variant::clipseg, variant::cris, variant::biomedclipseg,
                                               variant::biomedclipseg_d};
    return v;
}

void VLSMConfig::validate() const {
    const bool known = variant == variant::clipseg || variant == variant::cris ||
                       variant == variant::biomedclipseg || variant == variant::biomedclipseg_d;
    if (!known) throw Error("unknown variant: " + variant);
    const Conditioning expected =
        variant == variant::cris ? Conditioning::token_level : Conditioning::sentence_level;
    if (conditioning != expected)
        throw Error(variant + " requires " + conditioning_name(expected) + " conditioning");
    if (input_side <= 0 || patch <= 0 || input_side % patch != 0)
        throw Error("input side must be a positive multiple of the patch size");
    if (text_dim % text_heads != 0 || vision_dim % vision_heads != 0 || decoder_dim % decoder_heads != 0)
        throw Error("embedding dims must be divisible by head counts");
    if (context_len < 2) throw Error("context length must fit begin/end tokens");
    if (extract_depths.empty()) throw Error("at least one extraction depth required");
    for (int d : extract_depths)
        if (d < 1 || d > vision_layers) throw Error("extraction depth out of range");
}

VLSMConfig default_config(const std::string& variant_name) {
    VLSMConfig cfg;
    cfg.variant = variant_name;
    if (variant_name == variant::cris) {
        cfg.conditioning = Conditioning::token_level;
        cfg.input_side = 416;
    } else if (variant_name == variant::clipseg) {
        cfg.input_side = 352;
    } else {
        cfg.input_side = 224;  // BiomedCLIP-style backbone resolution
    }
    cfg.validate();
    return cfg;
}

VLSMConfig toy_config(const std::string& variant_name, int input_side) {
    VLSMConfig cfg = default_config(variant_name);
    cfg.input_side = input_side;
    cfg.context_len = 32;
    cfg.norm_mean = {0.5, 0.5, 0.5};
    cfg.norm_std = {0.25, 0.25, 0.25};
    cfg.validate();
    return cfg;
}

uint64_t ToyWeightsProvider::init_seed(const std::string& component, const VLSMConfig& config) const {
    const bool biomed = config.variant.rfind("biomedclipseg", 0) == 0;
    std::string tag;
    if (component == "text_encoder" || component == "vision_encoder") {
        tag = (biomed ? "biomedclip_" : "clip_") + component;
    } else if (component == "decoder") {
        if (config.variant == variant::biomedclipseg) {
            tag = "fresh_decoder";  // randomly initialized decoder
        } else if (config.variant == variant::cris) {
            tag = "cris_decoder";
        } else {
            tag = "clipseg_decoder";  // shared by clipseg and biomedclipseg_d
        }
    } else {
        throw Error("unknown component: " + component);
    }
    return derive_seed(seed_, tag);
}

CheckpointWeightsProvider::CheckpointWeightsProvider(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open checkpoint manifest: " + manifest_path);
    json m = json::parse(in);
    manifest_dir_ = fs::path(manifest_path).parent_path().string();
    for (const auto& [component, entry] : m.items()) {
        if (entry.is_string()) {
            files_[component] = entry.get<std::string>();
        } else {
            files_[component] = entry.at("file").get<std::string>();
            if (entry.contains("hash")) hashes_[component] = entry.at("hash").get<std::string>();
        }
    }
}

namespace {

std::string file_hash_hex(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string(hex);
}

}  // namespace

uint64_t CheckpointWeightsProvider::init_seed(const std::string&, const VLSMConfig&) const { return 0; }

void CheckpointWeightsProvider::post_load(const std::string& component, nn::ParamStore& store,
                                          const VLSMConfig&) const {
    auto it = files_.find(component);
    if (it == files_.end()) throw Error("missing checkpoint for component: " + component);
    fs::path file(it->second);
    if (file.is_relative() && !manifest_dir_.empty()) file = fs::path(manifest_dir_) / file;
    if (!fs::exists(file)) throw Error("missing checkpoint for component: " + component + " (" +
                                       file.string() + " not found)");
    auto hash_it = hashes_.find(component);
    if (hash_it != hashes_.end() && file_hash_hex(file) != hash_it->second)
        throw Error("checkpoint hash mismatch for component: " + component);
    const nn::TensorMap tensors = nn::load_tensors(file.string());
    const std::string prefix = component + ".";
    for (nn::Param& p : store.params()) {
        if (p.name.rfind(prefix, 0) != 0) continue;
        auto jt = tensors.find(p.name);
        if (jt == tensors.end()) throw Error("checkpoint for " + component + " missing " + p.name);
        if (jt->second.shape != p.var->shape) throw Error("checkpoint shape mismatch for " + p.name);
        p.var->v = jt->second.values;
    }
}

VLSM::VLSM(VLSMConfig config, const WeightsProvider& provider)
    : config_(std::move(config)), tokenizer_(config_.vocab_size, config_.context_len) {
    config_.validate();

    {
        Rng rng(provider.init_seed("text_encoder", config_));
        tok_embed_ = store_.add_gaussian("text_encoder.tok_embed", {config_.vocab_size, config_.text_dim},
                                         0.02, rng);
        text_pos_ = store_.add_gaussian("text_encoder.pos", {config_.context_len, config_.text_dim}, 0.02,
                                        rng);
        for (int i = 0; i < config_.text_layers; ++i)
            text_blocks_.emplace_back(store_, "text_encoder.block" + std::to_string(i), config_.text_dim,
                                      config_.text_heads, config_.text_dim * 2, rng);
        text_ln_ = nn::LayerNorm(store_, "text_encoder.ln", config_.text_dim);
        text_pool_ = nn::Linear(store_, "text_encoder.pool", config_.text_dim, config_.joint_dim, rng);
    }
    {
        Rng rng(provider.init_seed("vision_encoder", config_));
        const int tokens = config_.grid_side() * config_.grid_side();
        patch_embed_ = nn::Linear(store_, "vision_encoder.patch_embed",
                                  config_.patch * config_.patch * 3, config_.vision_dim, rng);
        vision_pos_ = store_.add_gaussian("vision_encoder.pos", {tokens, config_.vision_dim}, 0.02, rng);
        for (int i = 0; i < config_.vision_layers; ++i)
            vision_blocks_.emplace_back(store_, "vision_encoder.block" + std::to_string(i),
                                        config_.vision_dim, config_.vision_heads, config_.vision_dim * 2,
                                        rng);
        vision_ln_ = nn::LayerNorm(store_, "vision_encoder.ln", config_.vision_dim);
    }
    {
        Rng rng(provider.init_seed("decoder", config_));
        size_t n_stack = 1;
        if (config_.conditioning == Conditioning::sentence_level) {
            n_stack = config_.extract_depths.size();
            for (size_t i = 0; i < n_stack; ++i) {
                film_scale_.emplace_back(store_, "decoder.film" + std::to_string(i) + ".scale",
                                         config_.joint_dim, config_.vision_dim, rng);
                film_shift_.emplace_back(store_, "decoder.film" + std::to_string(i) + ".shift",
                                         config_.joint_dim, config_.vision_dim, rng);
            }
        } else {
            cross_attn_ = nn::MultiHeadAttention(store_, "decoder.cross_attn", config_.vision_dim,
                                                 config_.text_dim, config_.vision_heads, rng);
        }
        for (size_t i = 0; i < n_stack; ++i)
            stack_proj_.emplace_back(store_, "decoder.stack_proj" + std::to_string(i), config_.vision_dim,
                                     config_.decoder_dim, rng);
        decoder_block_ = nn::TransformerBlock(store_, "decoder.block", config_.decoder_dim,
                                              config_.decoder_heads, config_.decoder_dim * 2, rng);
        decoder_ln_ = nn::LayerNorm(store_, "decoder.ln", config_.decoder_dim);
        decoder_conv_ = nn::Conv2d(store_, "decoder.conv", config_.decoder_dim, config_.decoder_dim, 3, 1,
                                   1, rng);
        decoder_head_ = nn::Conv2d(store_, "decoder.head", config_.decoder_dim, 1, 1, 1, 0, rng);
    }

    for (const char* component : {"text_encoder", "vision_encoder", "decoder"})
        provider.post_load(component, store_, config_);

    if (config_.freeze_text) store_.freeze_prefix("text_encoder.");
    if (config_.freeze_image) store_.freeze_prefix("vision_encoder.");
}

TextEncoding VLSM::encode_text(const std::string& prompt) const {
    const Tokenized tok = tokenizer_.encode(prompt);
    TextEncoding enc;
    enc.ids = tok.ids;
    enc.truncated = tok.truncated;

    nn::Var x = nn::gather_rows(tok_embed_, tok.ids);
    std::vector<int> positions(tok.ids.size());
    for (size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
    x = nn::add(x, nn::gather_rows(text_pos_, positions));
    for (const auto& block : text_blocks_) x = block(x);
    x = text_ln_(x);

    enc.tokens = x;
    const std::vector<int> eos = {static_cast<int>(tok.ids.size()) - 1};
    enc.pooled = text_pool_(nn::gather_rows(x, eos));
    return enc;
}

VisionFeatures VLSM::encode_image(const Image& input) const {
    if (input.c != 3) throw Error("vision encoder expects a 3-channel image");
    if (input.h != config_.input_side || input.w != config_.input_side)
        throw Error("vision encoder expects a preprocessed " + std::to_string(config_.input_side) +
                    "px square input");

    const int p = config_.patch, grid = config_.grid_side();
    const int tokens = grid * grid, patch_dim = p * p * 3;
    std::vector<double> patches(static_cast<size_t>(tokens) * patch_dim);
    for (int py = 0; py < grid; ++py)
        for (int px = 0; px < grid; ++px) {
            double* dst = patches.data() + (static_cast<size_t>(py) * grid + px) * patch_dim;
            for (int dy = 0; dy < p; ++dy)
                for (int dx = 0; dx < p; ++dx)
                    for (int c = 0; c < 3; ++c)
                        *dst++ = input.at(py * p + dy, px * p + dx, c);
        }

    nn::Var x = patch_embed_(nn::make_var({tokens, patch_dim}, std::move(patches)));
    x = nn::add(x, vision_pos_);

    VisionFeatures feat;
    feat.grid_h = grid;
    feat.grid_w = grid;
    for (size_t i = 0; i < vision_blocks_.size(); ++i) {
        x = vision_blocks_[i](x);
        for (int depth : config_.extract_depths)
            if (depth == static_cast<int>(i) + 1) feat.skips.push_back(x);
    }
    feat.final_map = vision_ln_(x);
    return feat;
}

ConditionedStack VLSM::aggregate(const VisionFeatures& vision, const TextEncoding& text) const {
    ConditionedStack stack;
    stack.grid_h = vision.grid_h;
    stack.grid_w = vision.grid_w;
    if (config_.conditioning == Conditioning::sentence_level) {
        if (vision.skips.size() != film_scale_.size()) throw Error("aggregator: skip count mismatch");
        for (size_t i = 0; i < vision.skips.size(); ++i) {
            try {
                const nn::Var gain = nn::add_scalar(film_scale_[i](text.pooled), 1.0);
                const nn::Var mod =
                    nn::add_rowvec(nn::mul_rowvec(vision.skips[i], gain), film_shift_[i](text.pooled));
                stack.features.push_back(mod);
            } catch (const Error& e) {
                throw Error("aggregator film" + std::to_string(i) + ": " + e.what());
            }
        }
    } else {
        try {
            stack.features.push_back(nn::add(vision.final_map, cross_attn_(vision.final_map, text.tokens)));
        } catch (const Error& e) {
            throw Error(std::string("aggregator cross_attn: ") + e.what());
        }
    }
    return stack;
}

nn::Var VLSM::decode(const ConditionedStack& stack) const {
    if (stack.features.size() != stack_proj_.size()) throw Error("decoder: conditioned stack size mismatch");
    nn::Var x = stack_proj_[0](stack.features[0]);
    for (size_t i = 1; i < stack.features.size(); ++i)
        x = nn::add(x, stack_proj_[i](stack.features[i]));
    x = decoder_block_(x);
    x = decoder_ln_(x);
    nn::Var grid = nn::tokens_to_grid(x, stack.grid_h, stack.grid_w);
    grid = nn::gelu(decoder_conv_(nn::upsample_nearest2x(grid)));
    return decoder_head_(grid);  // {1, 2h, 2w}
}

nn::Var VLSM::forward_logits(const Image& input, const std::string& prompt) {
    const TextEncoding text = encode_text(prompt);
    const VisionFeatures vision = encode_image(input);
    return decode(aggregate(vision, text));
}

InputSpec VLSM::input_spec() const {
    return InputSpec{config_.input_side, config_.norm_mean, config_.norm_std};
}

std::unique_ptr<VLSM> build_variant(const VLSMConfig& config, const WeightsProvider& provider) {
    return std::make_unique<VLSM>(config, provider);
}

void export_component_checkpoints(const VLSM& model, const std::string& dir,
                                  const std::string& manifest_path) {
    fs::create_directories(dir);
    json manifest;
    for (const char* component : {"text_encoder", "vision_encoder", "decoder"}) {
        const std::string prefix = std::string(component) + ".";
        nn::TensorMap tensors;
        int64_t dims = 0;
        for (const nn::Param& p : model.store().params()) {
            if (p.name.rfind(prefix, 0) != 0) continue;
            tensors.emplace(p.name, nn::NamedTensor{p.var->shape, p.var->v});
            dims += p.var->numel();
        }
        const std::string file = (fs::path(dir) / (std::string(component) + ".ckpt")).string();
        save_tensors(file, tensors);
        manifest[component] = {{"file", file}, {"dims", dims}, {"hash", file_hash_hex(file)}};
    }
    std::ofstream out(manifest_path);
    out << manifest.dump(2) << "\n";
    if (!out) throw Error("failed writing manifest: " + manifest_path);
}

}  // namespace vlseg::models
