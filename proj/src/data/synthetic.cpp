#include "vlseg/data/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vlseg/png_io.hpp"
#include "vlseg/prompt/components.hpp"

namespace vlseg::data {

namespace fs = std::filesystem;
using prompt::AttributeKey;

namespace {

double unit_uniform(Rng& rng) { return static_cast<double>(rng() >> 11) / 9007199254740992.0; }

SampleTriplet make_blob_sample(int side, Rng& rng, const std::string& id, prompt::PromptType ptype) {
    SampleTriplet t;
    t.sample_id = id;
    t.image = Image(side, side, 3, 0.2f);
    t.mask = Mask(side, side);

    const int r = side / 6 + static_cast<int>(rng() % static_cast<uint64_t>(side / 6));
    const int cy = r + static_cast<int>(rng() % static_cast<uint64_t>(side - 2 * r));
    const int cx = r + static_cast<int>(rng() % static_cast<uint64_t>(side - 2 * r));
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) {
                t.mask.at(y, x) = 1;
                for (int c = 0; c < 3; ++c) t.image.at(y, x, c) = 0.8f;
            }

    const auto derived = prompt::extract_mask_attributes(t.mask);
    prompt::AttributeSet attrs;
    attrs.set(AttributeKey::class_keyword, "blob");
    attrs.set(AttributeKey::shape, "round");
    attrs.set(AttributeKey::color, "bright");
    attrs.set(AttributeKey::number, derived.number_word, prompt::Provenance::mask_derived);
    attrs.set(AttributeKey::size, derived.size_word, prompt::Provenance::mask_derived);
    attrs.set(AttributeKey::location, derived.location_words, prompt::Provenance::mask_derived);

    Rng prompt_rng(derive_seed(fnv1a(id), "blob_prompt"));
    t.prompt = prompt::compose_prompt(prompt::family::endoscopy, ptype, attrs, prompt_rng);
    t.class_name = "blob";
    t.dataset = "synthetic-blobs";
    return t;
}

}  // namespace

std::vector<SampleTriplet> make_blob_dataset(const BlobOptions& options) {
    Rng rng(derive_seed(options.seed, "blob_dataset"));
    std::vector<SampleTriplet> out;
    for (int i = 0; i < options.count; ++i)
        out.push_back(make_blob_sample(options.side, rng, "blob" + std::to_string(i), options.ptype));
    return out;
}

std::vector<QuadrantSample> make_quadrant_dataset(const QuadrantOptions& options) {
    Rng rng(derive_seed(options.seed, "quadrant_dataset"));
    const int side = options.side, half = side / 2;
    std::vector<QuadrantSample> out;
    for (int i = 0; i < options.count; ++i) {
        QuadrantSample qs;
        SampleTriplet& t = qs.triplet;
        t.sample_id = "quad" + std::to_string(i);
        t.dataset = "synthetic-quadrants";
        t.class_name = "region";

        t.image = Image(side, side, 3, 0.5f);
        for (float& v : t.image.data)
            v += static_cast<float>((unit_uniform(rng) - 0.5) * 2.0 * options.noise);

        const int q = i % 4;  // 0 tl, 1 tr, 2 bl, 3 br
        const int y0 = (q / 2) * half, x0 = (q % 2) * half;
        t.mask = Mask(side, side);
        for (int y = y0; y < y0 + half; ++y)
            for (int x = x0; x < x0 + half; ++x) t.mask.at(y, x) = 1;

        const auto derived = prompt::extract_mask_attributes(t.mask);
        qs.quadrant = derived.location_words.at(0);

        qs.attrs.set(AttributeKey::class_keyword, "region");
        qs.attrs.set(AttributeKey::shape, "square");
        qs.attrs.set(AttributeKey::color, "gray");
        qs.attrs.set(AttributeKey::number, derived.number_word, prompt::Provenance::mask_derived);
        qs.attrs.set(AttributeKey::size, derived.size_word, prompt::Provenance::mask_derived);
        qs.attrs.set(AttributeKey::location, derived.location_words, prompt::Provenance::mask_derived);

        Rng prompt_rng(derive_seed(fnv1a(t.sample_id), "quadrant_prompt"));
        t.prompt = prompt::compose_prompt(prompt::family::endoscopy, prompt::PromptType::P6, qs.attrs,
                                          prompt_rng);
        out.push_back(std::move(qs));
    }
    return out;
}

void write_synthetic_dataset(const std::string& root, const DatasetDescriptor& descriptor,
                             const std::array<int, 3>& counts, int side, uint64_t seed) {
    Rng rng(derive_seed(seed, "synthetic_" + descriptor.name));
    nlohmann::json classes;
    for (size_t i = 0; i < descriptor.class_names.size(); ++i)
        classes[descriptor.class_names[i]] = static_cast<int>(i) + 1;

    fs::create_directories(root);
    {
        std::ofstream out(fs::path(root) / "classes.json");
        out << classes.dump(2) << "\n";
    }
    fs::create_directories(fs::path(root) / "splits");
    for (Split s : kSplits) {
        const fs::path img_dir = fs::path(root) / "images" / split_name(s);
        const fs::path mask_dir = fs::path(root) / "masks" / split_name(s);
        fs::create_directories(img_dir);
        fs::create_directories(mask_dir);
        std::ofstream manifest(fs::path(root) / "splits" / (split_name(s) + ".txt"));
        for (int i = 0; i < counts[static_cast<size_t>(s)]; ++i) {
            const std::string id = descriptor.name + "_" + split_name(s) + "_" + std::to_string(i);
            const SampleTriplet t = make_blob_sample(side, rng, id, prompt::PromptType::P1);
            write_image_png((img_dir / (id + ".png")).string(), t.image);
            LabelMask labels(t.mask.h, t.mask.w);
            const int n_classes = static_cast<int>(descriptor.class_names.size());
            const uint8_t label = static_cast<uint8_t>(1 + (i % n_classes));
            for (size_t p = 0; p < t.mask.v.size(); ++p) labels.v[p] = t.mask.v[p] ? label : 0;
            write_label_png((mask_dir / (id + ".png")).string(), labels);
            manifest << id << "\n";
        }
    }
}

}  // namespace vlseg::data
