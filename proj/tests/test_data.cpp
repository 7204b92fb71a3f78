#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "vlseg/data/preprocess.hpp"
#include "vlseg/data/prompting.hpp"
#include "vlseg/data/registry.hpp"
#include "vlseg/data/synthetic.hpp"
#include "vlseg/eval/metrics.hpp"
#include "vlseg/png_io.hpp"

using namespace vlseg;
namespace fs = std::filesystem;

namespace {

const char* kRoot = "/tmp/vlseg_test_data";

data::DatasetDescriptor tiny_descriptor(const std::string& name, std::array<int, 3> splits,
                                        std::vector<std::string> classes = {"polyp"},
                                        bool test_only = false) {
    data::DatasetDescriptor d;
    d.name = name;
    d.display_name = name;
    d.category = "non-radiology";
    d.modality = "endoscopy";
    d.organ = "colon";
    d.class_names = std::move(classes);
    d.split_sizes = splits;
    d.family = prompt::family::endoscopy;
    d.test_only = test_only;
    return d;
}

std::shared_ptr<data::DatasetHandle> make_tiny(const std::string& name, std::array<int, 3> splits,
                                               std::vector<std::string> classes = {"polyp"},
                                               bool test_only = false, uint64_t seed = 1) {
    const auto desc = tiny_descriptor(name, splits, classes, test_only);
    const std::string root = std::string(kRoot) + "/" + name;
    fs::remove_all(root);
    data::write_synthetic_dataset(root, desc, splits, 24, seed);
    return data::register_dataset(desc, root);
}

}  // namespace

TEST_CASE("builtin descriptors match the published split sizes") {
    CHECK(data::builtin_descriptors().size() == 11);
    const auto& kvasir = data::find_descriptor("kvasir-seg");
    CHECK(kvasir.split_sizes == std::array<int, 3>{800, 100, 100});
    const auto& etis = data::find_descriptor("etis");
    CHECK(etis.split_sizes == std::array<int, 3>{0, 0, 196});
    CHECK(etis.test_only);
    const auto& colondb = data::find_descriptor("colondb");
    CHECK(colondb.split_sizes == std::array<int, 3>{0, 0, 380});
    const auto& cvc = data::find_descriptor("cvc300");
    CHECK(cvc.split_sizes == std::array<int, 3>{0, 0, 60});
    CHECK(data::find_descriptor("clinicdb").split_sizes == std::array<int, 3>{490, 61, 61});
    CHECK(data::find_descriptor("bkai").split_sizes == std::array<int, 3>{800, 100, 100});
    CHECK(data::find_descriptor("isic").split_sizes == std::array<int, 3>{810, 90, 379});
    CHECK(data::find_descriptor("dfu").split_sizes == std::array<int, 3>{1600, 200, 200});
    CHECK(data::find_descriptor("camus").split_sizes == std::array<int, 3>{4800, 600, 600});
    CHECK(data::find_descriptor("camus").class_names.size() == 3);
    CHECK(data::find_descriptor("busi").split_sizes == std::array<int, 3>{624, 78, 78});
    CHECK(data::find_descriptor("chexlocalize").split_sizes == std::array<int, 3>{1279, 446, 452});
    CHECK(data::find_descriptor("chexlocalize").class_names.size() == 10);
    CHECK_THROWS(data::find_descriptor("imagenet"));

    // endoscopy pooled train size: 800 + 490 + 800
    int total = 0;
    for (const auto& name : data::endoscopy_train_datasets())
        total += data::find_descriptor(name).split_size(data::Split::train);
    CHECK(total == 2090);
}

TEST_CASE("registry: enumerates splits, matches counts, stable order") {
    auto handle = make_tiny("tinyset", {4, 2, 2});
    CHECK(handle->size(data::Split::train) == 4);
    CHECK(handle->size(data::Split::val) == 2);
    CHECK(handle->size(data::Split::test) == 2);
    CHECK(handle->warnings().empty());

    // ids sorted and pairwise disjoint across splits
    std::set<std::string> seen;
    for (data::Split s : data::kSplits) {
        auto ids = handle->ids(s);
        auto sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        CHECK(ids == sorted);
        for (const auto& id : ids) CHECK(seen.insert(id).second);
    }

    // mismatching declared counts only warn
    auto desc = tiny_descriptor("tinyset", {5, 2, 2});
    auto handle2 = data::register_dataset(desc, std::string(kRoot) + "/tinyset");
    CHECK(handle2->warnings().size() == 1);
    CHECK(handle2->warnings()[0].find("expected 5") != std::string::npos);
    CHECK(handle2->warnings()[0].find("observed 4") != std::string::npos);
}

TEST_CASE("registry: structural errors") {
    // missing mask
    auto handle = make_tiny("badmask", {2, 1, 1});
    fs::remove(fs::path(kRoot) / "badmask" / "masks" / "train" /
               (handle->ids(data::Split::train)[0] + ".png"));
    CHECK_THROWS_WITH_AS(data::register_dataset(tiny_descriptor("badmask", {2, 1, 1}),
                                                std::string(kRoot) + "/badmask"),
                         doctest::Contains("missing mask"), Error);

    // test-only with train data
    make_tiny("wrongsplit", {1, 0, 1});
    CHECK_THROWS_WITH_AS(
        data::register_dataset(tiny_descriptor("wrongsplit", {0, 0, 1}, {"polyp"}, true),
                               std::string(kRoot) + "/wrongsplit"),
        doctest::Contains("test-only"), Error);

    // empty root
    fs::remove_all(std::string(kRoot) + "/empty");
    fs::create_directories(std::string(kRoot) + "/empty");
    CHECK_THROWS_WITH_AS(
        data::register_dataset(tiny_descriptor("empty", {0, 0, 0}), std::string(kRoot) + "/empty"),
        doctest::Contains("no samples found"), Error);
}

TEST_CASE("expand_multiclass: per-class binarization") {
    Image img(6, 6, 3, 0.5f);
    LabelMask labels(6, 6);
    labels.at(0, 0) = 1;
    labels.at(0, 1) = 1;
    labels.at(3, 3) = 3;
    const std::map<std::string, int> table = {{"Myocardium", 1}, {"Left ventricular cavity", 2},
                                              {"Left atrium cavity", 3}};

    const auto triplets = data::expand_multiclass(img, labels, table);
    REQUIRE(triplets.size() == 3);  // one per class, absent class included
    CHECK(triplets[0].class_name == "Myocardium");
    CHECK(triplets[0].mask.foreground() == 2);
    CHECK(triplets[1].class_name == "Left ventricular cavity");
    CHECK(triplets[1].mask.foreground() == 0);  // absent -> all-zero mask
    CHECK(triplets[2].mask.foreground() == 1);

    // union of per-class masks reconstructs the foreground
    size_t fg = 0;
    for (const auto& t : triplets) fg += t.mask.foreground();
    size_t expected = 0;
    for (uint8_t v : labels.v) expected += v != 0;
    CHECK(fg == expected);

    const auto present_only = data::expand_multiclass(img, labels, table, false);
    CHECK(present_only.size() == 2);

    LabelMask bad(6, 6);
    bad.at(1, 1) = 9;
    CHECK_THROWS_WITH_AS(data::expand_multiclass(img, bad, table),
                         doctest::Contains("unknown label"), Error);

    // binary dataset: one triplet
    LabelMask binary(6, 6);
    binary.at(2, 2) = 1;
    CHECK(data::expand_multiclass(img, binary, {{"polyp", 1}}).size() == 1);

    // ten-class bookkeeping: 2 present, 8 empty, 10 triplets
    std::map<std::string, int> ten;
    for (int i = 1; i <= 10; ++i) ten["c" + std::to_string(i)] = i;
    LabelMask two(6, 6);
    two.at(0, 0) = 2;
    two.at(5, 5) = 7;
    const auto chex = data::expand_multiclass(img, two, ten);
    CHECK(chex.size() == 10);
    int nonempty = 0;
    for (const auto& t : chex) nonempty += t.mask.foreground() > 0;
    CHECK(nonempty == 2);
}

TEST_CASE("pool: additivity, provenance, guards, determinism") {
    auto a = make_tiny("poola", {3, 1, 1}, {"polyp"}, false, 10);
    auto b = make_tiny("poolb", {2, 1, 1}, {"polyp"}, false, 11);

    const auto pooled = data::pool({a, b}, data::PoolKind::endoscopy_only, 42);
    CHECK(pooled.size(data::Split::train) == 5);  // exact additivity
    CHECK(pooled.size(data::Split::val) == 2);
    CHECK(pooled.members().size() == 2);
    for (const auto& e : pooled.entries(data::Split::train)) {
        CHECK(e.member >= 0);
        CHECK(e.member < 2);
    }

    // identity: pool of one dataset keeps the same sample set
    const auto single = data::pool({a}, data::PoolKind::all, 0);
    std::set<std::string> ids;
    for (const auto& e : single.entries(data::Split::train)) ids.insert(e.id);
    CHECK(ids == std::set<std::string>(a->ids(data::Split::train).begin(),
                                       a->ids(data::Split::train).end()));

    // deterministic shuffle
    const auto p1 = data::pool({a, b}, data::PoolKind::all, 7);
    const auto p2 = data::pool({a, b}, data::PoolKind::all, 7);
    for (data::Split s : data::kSplits) {
        REQUIRE(p1.size(s) == p2.size(s));
        for (size_t i = 0; i < p1.entries(s).size(); ++i) {
            CHECK(p1.entries(s)[i].member == p2.entries(s)[i].member);
            CHECK(p1.entries(s)[i].id == p2.entries(s)[i].id);
        }
    }

    // test-only membership is rejected
    auto testonly = make_tiny("pooltest", {0, 0, 2}, {"polyp"}, true, 12);
    CHECK_THROWS_WITH_AS(data::pool({a, testonly}, data::PoolKind::all, 0),
                         doctest::Contains("test-only"), Error);

    // endoscopy-only restriction
    auto skin = make_tiny("poolskin", {2, 1, 1}, {"skin melanoma"}, false, 13);
    const_cast<data::DatasetDescriptor&>(skin->descriptor()).family = prompt::family::isic;
    CHECK_THROWS_WITH_AS(data::pool({a, skin}, data::PoolKind::endoscopy_only, 0),
                         doctest::Contains("endoscopy-only"), Error);
}

TEST_CASE("preprocess: resize + standardize; errors on non-3-channel") {
    Image img(512, 612, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = 0.75f;
    models::InputSpec spec;
    spec.side = 352;
    spec.mean = {0.5, 0.5, 0.5};
    spec.stdev = {0.25, 0.25, 0.25};
    const Image out = data::preprocess(img, spec);
    CHECK(out.h == 352);
    CHECK(out.w == 352);
    CHECK(out.at(10, 10, 0) == doctest::Approx(1.0));  // (0.75-0.5)/0.25

    Image gray(8, 8, 1);
    CHECK_THROWS(data::preprocess(gray, spec));
}

TEST_CASE("restore: constants survive, block masks round trip at dice 1") {
    FloatMap constant(16, 16, 2.5f);
    const FloatMap up = data::restore(constant, 64, 48);
    for (float v : up.v) CHECK(v == doctest::Approx(2.5));

    // blockwise-constant mask, block size >= scale factor
    Mask mask(32, 32);
    for (int y = 8; y < 24; ++y)
        for (int x = 16; x < 32; ++x) mask.at(y, x) = 1;
    FloatMap logits_small(8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) logits_small.at(y, x) = mask.at(y * 4 + 2, x * 4 + 2) ? 8.f : -8.f;
    const Mask restored = data::threshold_logits(data::restore(logits_small, 32, 32));
    CHECK(evaluation::dice_score(restored, restored) == 1.0);  // round trip vs itself
    // vs the original: aligned block edges survive, corners round slightly
    CHECK(evaluation::dice_score(restored, mask) >= 0.95);
}

TEST_CASE("threshold at exactly 0.5 is excluded (strict greater)") {
    FloatMap zeros(4, 4, 0.0f);  // sigmoid(0) == 0.5 exactly
    const Mask m = data::threshold_logits(zeros);
    CHECK(m.foreground() == 0);
    FloatMap tens(4, 4, 10.0f);
    CHECK(data::threshold_logits(tens).foreground() == 16);
}

TEST_CASE("prompting: attributes derived per family; sidecar never overrides masks") {
    data::SampleTriplet t;
    t.sample_id = "img1";
    t.class_name = "benign tumor";
    t.image = Image(30, 30, 3, 0.4f);
    t.mask = Mask(30, 30);
    for (int y = 12; y < 18; ++y)
        for (int x = 12; x < 18; ++x) t.mask.at(y, x) = 1;

    data::PromptingConfig cfg;
    cfg.sidecar = prompt::parse_attribute_sidecar(R"({"img1": {"shape":"square-shaped"}})");
    const auto attrs = data::derive_attributes(t, data::find_descriptor("busi"), cfg);
    CHECK(attrs.require(prompt::AttributeKey::class_keyword).joined() == "tumor");
    CHECK(attrs.require(prompt::AttributeKey::tumor_type).joined() == "benign");
    CHECK(attrs.require(prompt::AttributeKey::number).joined() == "one");
    CHECK(attrs.require(prompt::AttributeKey::location).joined() == "center");
    CHECK(attrs.require(prompt::AttributeKey::shape).joined() == "square-shaped");
    CHECK(attrs.require(prompt::AttributeKey::shape).prov == prompt::Provenance::sidecar);
    CHECK(attrs.require(prompt::AttributeKey::number).prov == prompt::Provenance::mask_derived);
}

TEST_CASE("prompting: generation pipeline emits records and jsonl") {
    auto handle = make_tiny("prompted", {3, 1, 1});

    // without a sidecar, P6 needs shape/color it does not have: P1 fallback
    data::PromptingConfig bare;
    bare.seed = 5;
    const auto fallbacks =
        data::generate_prompt_records(*handle, data::Split::train, prompt::PromptType::P6, bare);
    REQUIRE(fallbacks.size() == 3);
    for (const auto& rec : fallbacks) {
        CHECK(rec.fallback);
        CHECK(rec.prompt == "polyp");
    }

    data::PromptingConfig cfg;
    cfg.seed = 5;
    std::string sidecar_json = "{";
    for (size_t i = 0; i < handle->ids(data::Split::train).size(); ++i) {
        if (i) sidecar_json += ",";
        sidecar_json +=
            "\"" + handle->ids(data::Split::train)[i] + "\": {\"color\":\"pink\",\"shape\":\"round\"}";
    }
    sidecar_json += "}";
    cfg.sidecar = prompt::parse_attribute_sidecar(sidecar_json);
    const auto records =
        data::generate_prompt_records(*handle, data::Split::train, prompt::PromptType::P6, cfg);
    REQUIRE(records.size() == 3);
    for (const auto& rec : records) {
        CHECK(rec.prompt.find("pink round polyp") != std::string::npos);
        CHECK(rec.prompt.find("located in the") != std::string::npos);
        CHECK_FALSE(rec.fallback);
    }
    // deterministic across calls
    const auto again =
        data::generate_prompt_records(*handle, data::Split::train, prompt::PromptType::P6, cfg);
    for (size_t i = 0; i < records.size(); ++i) CHECK(records[i].prompt == again[i].prompt);

    const std::string path = std::string(kRoot) + "/prompts.jsonl";
    data::write_prompt_jsonl(path, records);
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(line.find("\"sample_id\"") != std::string::npos);
        CHECK(line.find("\"ptype\":\"P6\"") != std::string::npos);
    }
    CHECK(lines == 3);
}

TEST_CASE("prompting: freetext prompts bypass the template engine") {
    const std::string path = std::string(kRoot) + "/freetext.json";
    {
        std::ofstream out(path);
        out << R"({"img1": "The heart is enlarged.", "img2": "No acute findings."})";
    }
    const auto prompts = data::load_freetext_prompts(path);
    CHECK(prompts.size() == 2);
    CHECK(prompts.at("img1") == "The heart is enlarged.");

    std::vector<data::SampleTriplet> triplets(3);
    triplets[0].sample_id = "img1";
    triplets[0].prompt = "templated prompt";
    triplets[1].sample_id = "img2";
    triplets[2].sample_id = "img9";
    triplets[2].prompt = "stays";
    CHECK(data::apply_freetext_prompts(triplets, prompts) == 2);
    CHECK(triplets[0].prompt == "The heart is enlarged.");
    CHECK(triplets[1].prompt == "No acute findings.");
    CHECK(triplets[2].prompt == "stays");
}

TEST_CASE("synthetic quadrant data: location word determines the mask") {
    const auto samples = data::make_quadrant_dataset({8, 32, 0, 0.05});
    REQUIRE(samples.size() == 8);
    std::set<std::string> quadrants;
    for (const auto& qs : samples) {
        quadrants.insert(qs.quadrant);
        CHECK(qs.triplet.mask.foreground() == 16 * 16);
        CHECK(qs.triplet.prompt.find(qs.quadrant) != std::string::npos);
        CHECK(qs.triplet.prompt ==
              "one medium gray square region, located in the " + qs.quadrant + " of the image");
    }
    CHECK(quadrants == std::set<std::string>{"top left", "top right", "bottom left", "bottom right"});
}

TEST_CASE("description draw: fixed per sample at eval, re-drawn per training step") {
    prompt::AttributeSet attrs;
    attrs.set(prompt::AttributeKey::class_keyword, "polyp");

    const std::string eval1 = data::prompt_for(attrs, prompt::family::endoscopy,
                                               prompt::PromptType::P7, "img1/polyp", 3);
    const std::string eval2 = data::prompt_for(attrs, prompt::family::endoscopy,
                                               prompt::PromptType::P7, "img1/polyp", 3);
    CHECK(eval1 == eval2);  // sample-id-seeded draw is stable

    std::set<std::string> step_prompts;
    for (uint64_t step = 0; step < 40; ++step)
        step_prompts.insert(data::prompt_for(attrs, prompt::family::endoscopy,
                                             prompt::PromptType::P7, "img1/polyp", 3, step));
    CHECK(step_prompts.size() > 1);      // re-randomized across steps
    CHECK(step_prompts.size() <= 5);     // always one of the 5 bank strings
    CHECK(data::prompt_for(attrs, prompt::family::endoscopy, prompt::PromptType::P7, "img1/polyp", 3,
                           7) ==
          data::prompt_for(attrs, prompt::family::endoscopy, prompt::PromptType::P7, "img1/polyp", 3,
                           7));
}

TEST_CASE("split manifests override directory enumeration") {
    auto handle = make_tiny("manifested", {4, 1, 1});
    const fs::path root = fs::path(kRoot) / "manifested";
    // reverse the train order and drop one id via an explicit manifest
    auto ids = handle->ids(data::Split::train);
    fs::create_directories(root / "splits");
    {
        std::ofstream out(root / "splits" / "train.txt");
        out << ids[2] << "\n" << ids[0] << "\n";
    }
    auto desc = tiny_descriptor("manifested", {2, 1, 1});
    auto manifested = data::register_dataset(desc, root.string());
    REQUIRE(manifested->size(data::Split::train) == 2);
    CHECK(manifested->ids(data::Split::train)[0] == ids[2]);  // manifest order preserved
    CHECK(manifested->ids(data::Split::train)[1] == ids[0]);

    {
        std::ofstream out(root / "splits" / "train.txt");
        out << "not_a_real_id\n";
    }
    CHECK_THROWS_WITH_AS(data::register_dataset(desc, root.string()),
                         doctest::Contains("manifest lists missing image"), Error);
    fs::remove_all(root / "splits");
}

TEST_CASE("png round trip") {
    Image img(9, 7, 3);
    Rng rng(1);
    for (float& v : img.data) v = static_cast<float>(rng() % 256) / 255.f;
    const std::string path = std::string(kRoot) + "/roundtrip.png";
    fs::create_directories(kRoot);
    write_image_png(path, img);
    const Image back = read_image_png(path);
    REQUIRE(back.h == 9);
    REQUIRE(back.w == 7);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(img.data[i] - back.data[i]) < 1.0f / 254.f);

    LabelMask labels(5, 5);
    labels.at(2, 2) = 3;
    write_label_png(std::string(kRoot) + "/labels.png", labels);
    const LabelMask lback = read_label_png(std::string(kRoot) + "/labels.png");
    CHECK(lback.v == labels.v);
}
