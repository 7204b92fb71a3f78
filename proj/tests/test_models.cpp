#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vlseg/baselines/unet.hpp"
#include "vlseg/models/vlsm.hpp"
#include "vlseg/nn/optim.hpp"
#include "vlseg/train/loss.hpp"

using namespace vlseg;
using models::Conditioning;
using models::VLSM;
using models::VLSMConfig;

namespace {

// Minimal model, small enough to finite-difference every parameter.
VLSMConfig micro_config(const std::string& variant) {
    VLSMConfig cfg;
    cfg.variant = variant;
    cfg.conditioning =
        variant == models::variant::cris ? Conditioning::token_level : Conditioning::sentence_level;
    cfg.input_side = 4;
    cfg.patch = 2;
    cfg.context_len = 8;
    cfg.vocab_size = 8;
    cfg.text_dim = 4;
    cfg.text_layers = 1;
    cfg.text_heads = 1;
    cfg.joint_dim = 4;
    cfg.vision_dim = 4;
    cfg.vision_layers = 1;
    cfg.vision_heads = 1;
    cfg.extract_depths = {1};
    cfg.decoder_dim = 4;
    cfg.decoder_heads = 1;
    cfg.norm_mean = {0.5, 0.5, 0.5};
    cfg.norm_std = {0.25, 0.25, 0.25};
    cfg.validate();
    return cfg;
}

Image test_image(int side, uint64_t seed) {
    Rng rng(seed);
    Image img(side, side, 3);
    for (float& v : img.data) v = static_cast<float>(static_cast<double>(rng() >> 11) / 9007199254740992.0);
    return img;
}

}  // namespace

TEST_CASE("config invariants: conditioning is tied to the variant") {
    CHECK(models::default_config("clipseg").conditioning == Conditioning::sentence_level);
    CHECK(models::default_config("cris").conditioning == Conditioning::token_level);
    CHECK(models::default_config("biomedclipseg").conditioning == Conditioning::sentence_level);
    CHECK(models::default_config("biomedclipseg_d").conditioning == Conditioning::sentence_level);
    CHECK(models::default_config("clipseg").input_side == 352);
    CHECK(models::default_config("cris").input_side == 416);

    VLSMConfig bad = models::default_config("cris");
    bad.conditioning = Conditioning::sentence_level;
    CHECK_THROWS(bad.validate());
    CHECK_THROWS(models::default_config("resnet"));
}

TEST_CASE("encode_text: empty prompt, determinism, truncation") {
    const models::ToyWeightsProvider provider(7);
    VLSM model(models::toy_config("clipseg"), provider);

    const auto empty = model.encode_text("");
    CHECK(empty.ids.size() == 2);  // begin + end tokens only
    CHECK(empty.tokens->rows() == 2);
    CHECK_FALSE(empty.truncated);

    const auto a = model.encode_text("one medium pink round polyp");
    const auto b = model.encode_text("one medium pink round polyp");
    CHECK(a.ids == b.ids);
    CHECK(a.tokens->v == b.tokens->v);
    CHECK(a.pooled->v == b.pooled->v);

    std::string longprompt;
    for (int i = 0; i < 500; ++i) longprompt += "word" + std::to_string(i) + " ";
    const auto truncated = model.encode_text(longprompt);
    CHECK(truncated.truncated);
    CHECK(truncated.ids.size() == static_cast<size_t>(model.config().context_len));
}

TEST_CASE("tokenizer: location words map to distinct ids") {
    const models::HashTokenizer tok(512, 77);
    std::set<int> ids;
    for (const char* w : {"top", "bottom", "left", "right", "center", "one", "two", "small", "medium",
                          "large", "polyp", "blob", "region", "pink", "round"})
        ids.insert(tok.word_id(w));
    CHECK(ids.size() == 15);
}

TEST_CASE("sentence-level identity modulation returns the input activations") {
    const models::ToyWeightsProvider provider(3);
    VLSM model(models::toy_config("clipseg"), provider);
    // zero the affine generators: scale becomes exactly 1, shift exactly 0
    for (nn::Param& p : model.store().params())
        if (p.name.find("decoder.film") != std::string::npos)
            std::fill(p.var->v.begin(), p.var->v.end(), 0.0);

    const Image img = test_image(model.config().input_side, 1);
    const auto text = model.encode_text("one small bright round blob");
    const auto vision = model.encode_image(img);
    const auto stack = model.aggregate(vision, text);
    REQUIRE(stack.features.size() == vision.skips.size());
    for (size_t i = 0; i < stack.features.size(); ++i)
        CHECK(stack.features[i]->v == vision.skips[i]->v);  // bit-identical
}

TEST_CASE("token-level zero fusion returns the vision features") {
    const models::ToyWeightsProvider provider(4);
    VLSM model(models::toy_config("cris"), provider);
    for (nn::Param& p : model.store().params()) {
        if (p.name.rfind("decoder.cross_attn.out.", 0) == 0)
            std::fill(p.var->v.begin(), p.var->v.end(), 0.0);
        if (p.name == "text_encoder.tok_embed") std::fill(p.var->v.begin(), p.var->v.end(), 0.0);
    }
    const Image img = test_image(model.config().input_side, 2);
    const auto text = model.encode_text("one small bright round blob");
    const auto vision = model.encode_image(img);
    const auto stack = model.aggregate(vision, text);
    REQUIRE(stack.features.size() == 1);
    CHECK(stack.features[0]->v == vision.final_map->v);  // bit-identical
}

TEST_CASE("token-level conditioning is sensitive to the location word") {
    const models::ToyWeightsProvider provider(5);
    VLSM model(models::toy_config("cris"), provider);
    const Image img = test_image(model.config().input_side, 3);
    const auto vision = model.encode_image(img);
    const auto a = model.aggregate(vision, model.encode_text("one small blob in the top left"));
    const auto b = model.aggregate(vision, model.encode_text("one small blob in the bottom right"));
    CHECK(a.features[0]->v != b.features[0]->v);
}

TEST_CASE("forward: deterministic logits and output shape contract") {
    for (const char* variant : {"clipseg", "cris"}) {
        const models::ToyWeightsProvider provider(6);
        VLSM model(models::toy_config(variant), provider);
        const Image img = test_image(model.config().input_side, 4);
        const std::string prompt = "one medium bright round blob, located in the center of the image";
        const nn::Var l1 = model.forward_logits(img, prompt);
        const nn::Var l2 = model.forward_logits(img, prompt);
        CHECK(l1->v == l2->v);  // eval-mode forward is pure
        REQUIRE(l1->shape.size() == 3);
        CHECK(l1->shape[0] == 1);
        CHECK(l1->shape[1] == model.output_side());
        CHECK(l1->shape[2] == model.output_side());
        CHECK(model.output_side() == model.config().input_side / 4);
        for (double v : l1->v) CHECK(std::isfinite(v));
    }
}

TEST_CASE("combined-loss gradients match finite differences on micro models") {
    for (const char* variant : {"clipseg", "cris"}) {
        CAPTURE(variant);
        const models::ToyWeightsProvider provider(8);
        VLSM model(micro_config(variant), provider);
        REQUIRE(model.store().total_size() <= 1000);

        const Image img = test_image(model.config().input_side, 5);
        const std::string prompt = "blob top left";
        Rng trng(9);
        std::vector<double> target(static_cast<size_t>(model.output_side()) * model.output_side());
        for (double& t : target) t = trng() % 2;

        auto forward = [&] {
            nn::Var logits = model.forward_logits(img, prompt);
            nn::Var tgt = nn::make_var(logits->shape, target);
            return train::combined_loss_graph(logits, tgt, {});
        };
        nn::Var loss = forward();
        model.store().zero_grad();
        nn::backward(loss);

        const double h = 1e-5;
        for (nn::Param& p : model.store().params()) {
            // components unused by this conditioning mode keep a zero gradient
            const bool dead = p.var->g.empty();
            for (size_t i = 0; i < p.var->v.size(); ++i) {
                const double keep = p.var->v[i];
                p.var->v[i] = keep + h;
                const double up = forward()->v[0];
                p.var->v[i] = keep - h;
                const double down = forward()->v[0];
                p.var->v[i] = keep;
                const double fd = (up - down) / (2 * h);
                const double analytic = dead ? 0.0 : p.var->g[i];
                CHECK(std::isfinite(analytic));
                const double rel =
                    std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
                if (rel >= 1e-3) {
                    CAPTURE(p.name);
                    CAPTURE(i);
                    CAPTURE(fd);
                    CAPTURE(analytic);
                    CHECK(rel < 1e-3);
                }
            }
        }
    }
}

TEST_CASE("build_variant: encoder and decoder weight relations") {
    const models::ToyWeightsProvider provider(11);
    auto clipseg = models::build_variant(models::toy_config("clipseg"), provider);
    auto biomed = models::build_variant(models::toy_config("biomedclipseg"), provider);
    auto biomed_d = models::build_variant(models::toy_config("biomedclipseg_d"), provider);

    auto values = [](const VLSM& m, const std::string& prefix) {
        std::vector<double> out;
        for (const nn::Param& p : m.store().params())
            if (p.name.rfind(prefix, 0) == 0) out.insert(out.end(), p.var->v.begin(), p.var->v.end());
        return out;
    };

    // biomedclipseg and biomedclipseg_d share encoders byte for byte
    CHECK(values(*biomed, "text_encoder.") == values(*biomed_d, "text_encoder."));
    CHECK(values(*biomed, "vision_encoder.") == values(*biomed_d, "vision_encoder."));
    // ...but differ from the clip-backboned variants
    CHECK(values(*biomed, "text_encoder.") != values(*clipseg, "text_encoder."));
    // decoder: biomedclipseg_d copies the clipseg decoder, biomedclipseg draws fresh
    CHECK(values(*biomed_d, "decoder.") == values(*clipseg, "decoder."));
    CHECK(values(*biomed, "decoder.") != values(*biomed_d, "decoder."));

    // same provider seed builds identical models
    const models::ToyWeightsProvider again(11);
    auto clipseg2 = models::build_variant(models::toy_config("clipseg"), again);
    CHECK(values(*clipseg, "") == values(*clipseg2, ""));
}

TEST_CASE("frozen encoders stay bit-identical through optimizer steps") {
    VLSMConfig cfg = models::toy_config("clipseg");
    cfg.freeze_text = true;
    cfg.freeze_image = true;
    const models::ToyWeightsProvider provider(12);
    VLSM model(cfg, provider);

    std::vector<double> encoder_before;
    for (const nn::Param& p : model.store().params())
        if (p.name.rfind("decoder.", 0) != 0)
            encoder_before.insert(encoder_before.end(), p.var->v.begin(), p.var->v.end());

    nn::Optimizer opt(model.store(), nn::OptimizerKind::adamw, 1e-2, 1e-3);
    const Image img = test_image(cfg.input_side, 6);
    std::vector<double> target(static_cast<size_t>(model.output_side()) * model.output_side(), 1.0);
    for (int step = 0; step < 10; ++step) {
        model.store().zero_grad();
        nn::Var logits = model.forward_logits(img, "one small bright round blob");
        nn::Var loss = train::combined_loss_graph(logits, nn::make_var(logits->shape, target), {});
        nn::backward(loss);
        opt.step();
    }

    std::vector<double> encoder_after;
    double decoder_change = 0;
    for (const nn::Param& p : model.store().params()) {
        if (p.name.rfind("decoder.", 0) != 0) {
            encoder_after.insert(encoder_after.end(), p.var->v.begin(), p.var->v.end());
        } else {
            for (double v : p.var->v) decoder_change += std::abs(v);
        }
    }
    CHECK(encoder_before == encoder_after);
    CHECK(decoder_change > 0);
}

TEST_CASE("checkpoint provider: round trip and missing component") {
    namespace fs = std::filesystem;
    const std::string dir = "/tmp/vlseg_test_provider";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const models::ToyWeightsProvider toy(13);
    VLSM original(models::toy_config("clipseg"), toy);
    models::export_component_checkpoints(original, dir, dir + "/manifest.json");

    const models::CheckpointWeightsProvider from_ckpt(dir + "/manifest.json");
    VLSM rebuilt(models::toy_config("clipseg"), from_ckpt);
    CHECK(rebuilt.store().snapshot() == original.store().snapshot());

    // manifest without a decoder entry names the missing component
    {
        std::ifstream in(dir + "/manifest.json");
        nlohmann::json m = nlohmann::json::parse(in);
        m.erase("decoder");
        std::ofstream out(dir + "/partial.json");
        out << m.dump();
    }
    const models::CheckpointWeightsProvider partial(dir + "/partial.json");
    CHECK_THROWS_WITH_AS(VLSM(models::toy_config("clipseg"), partial),
                         doctest::Contains("missing checkpoint for component: decoder"), Error);

    // corrupting a component file trips the manifest hash check
    {
        std::fstream f(dir + "/decoder.ckpt", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(-8, std::ios::end);
        const double junk = 1234.5;
        f.write(reinterpret_cast<const char*>(&junk), sizeof(junk));
    }
    const models::CheckpointWeightsProvider tampered(dir + "/manifest.json");
    CHECK_THROWS_WITH_AS(VLSM(models::toy_config("clipseg"), tampered),
                         doctest::Contains("hash mismatch"), Error);
}

TEST_CASE("unet: prompt-free, skip count, deterministic, correct shape") {
    baselines::CNNConfig cfg;
    cfg.input_side = 16;
    cfg.base_width = 4;
    cfg.depth = 2;
    cfg.seed = 3;
    baselines::UNet unet(cfg);
    CHECK(unet.skip_count() == 2);
    CHECK_FALSE(unet.uses_prompts());

    const Image img = test_image(16, 7);
    const nn::Var a = unet.forward_logits(img, "one small polyp");
    const nn::Var b = unet.forward_logits(img, "completely different prompt");
    CHECK(a->v == b->v);  // prompts are ignored entirely
    REQUIRE(a->shape.size() == 3);
    CHECK(a->shape[1] == 16);  // output resolution == input resolution
    CHECK(a->shape[2] == 16);

    baselines::UNet unet2(cfg);
    const nn::Var c = unet2.forward_logits(img, "");
    CHECK(a->v == c->v);  // same seed, same weights, same output
}
