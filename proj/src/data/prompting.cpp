#include "vlseg/data/prompting.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "vlseg/png_io.hpp"
#include "vlseg/prompt/components.hpp"

namespace vlseg::data {

using prompt::AttributeKey;
using prompt::AttributeSet;
using prompt::PromptType;

AttributeSet derive_attributes(const SampleTriplet& triplet, const DatasetDescriptor& descriptor,
                               const PromptingConfig& config,
                               const std::vector<std::string>& present_classes) {
    AttributeSet attrs;

    if (descriptor.family == prompt::family::busi) {
        attrs.set(AttributeKey::class_keyword, "tumor");
        const auto space = triplet.class_name.find(' ');
        attrs.set(AttributeKey::tumor_type, triplet.class_name.substr(0, space));
    } else {
        attrs.set(AttributeKey::class_keyword, triplet.class_name);
    }

    const auto derived = prompt::extract_mask_attributes(triplet.mask, config.extraction);
    if (derived.component_count > 0) {
        attrs.set(AttributeKey::number, derived.number_word, prompt::Provenance::mask_derived);
        attrs.set(AttributeKey::size, derived.size_word, prompt::Provenance::mask_derived);
        attrs.set(AttributeKey::location, derived.location_words, prompt::Provenance::mask_derived);
    } else if (descriptor.family == prompt::family::busi) {
        attrs.set(AttributeKey::number, "no", prompt::Provenance::mask_derived);
    }

    if (descriptor.family == prompt::family::chexlocalize && !present_classes.empty())
        attrs.set(AttributeKey::pathology, present_classes, prompt::Provenance::mask_derived);

    auto it = config.sidecar.find(triplet.sample_id);
    if (it != config.sidecar.end()) attrs.merge_missing(it->second);

    return attrs;
}

std::string prompt_for(const AttributeSet& attrs, const std::string& family, PromptType ptype,
                       const std::string& sample_id, uint64_t seed, std::optional<uint64_t> step,
                       bool* fallback) {
    const uint64_t base = derive_seed(seed, "prompt_" + sample_id);
    Rng rng(step ? derive_seed(base, "step" + std::to_string(*step)) : base);
    if (fallback) *fallback = false;
    try {
        return prompt::compose_prompt(family, ptype, attrs, rng);
    } catch (const Error&) {
        if (ptype == PromptType::P0 || ptype == PromptType::P1) throw;
        // missing attribute for this sample: fall back to the class-name form
        if (fallback) *fallback = true;
        Rng retry_rng(step ? derive_seed(base, "step" + std::to_string(*step)) : base);
        return prompt::compose_prompt(family, PromptType::P1, attrs, retry_rng);
    }
}

namespace {

std::vector<std::string> classes_present(const DatasetHandle& handle, const LabelMask& labels) {
    std::vector<std::string> present;
    std::vector<std::pair<int, std::string>> ordered;
    for (const auto& [name, label] : handle.class_table()) ordered.emplace_back(label, name);
    std::sort(ordered.begin(), ordered.end());
    for (const auto& [label, name] : ordered) {
        bool found = false;
        for (uint8_t v : labels.v)
            if (v == label) {
                found = true;
                break;
            }
        if (found) present.push_back(name);
    }
    return present;
}

}  // namespace

std::vector<PromptRecord> generate_prompt_records(const DatasetHandle& handle, Split split,
                                                  PromptType ptype, const PromptingConfig& config) {
    std::vector<PromptRecord> records;
    const DatasetDescriptor& desc = handle.descriptor();
    if (!prompt::prompt_type_available(desc.family, ptype))
        throw Error("prompt type unavailable");
    for (const std::string& id : handle.ids(split)) {
        const LabelMask labels = handle.load_label_mask(split, id);
        const Image image = handle.load_image(split, id);
        const auto present = classes_present(handle, labels);
        for (SampleTriplet& t : expand_multiclass(image, labels, handle.class_table(), config.emit_absent)) {
            t.sample_id = id;
            t.dataset = desc.name;
            PromptRecord rec;
            rec.sample_id = id;
            rec.class_name = t.class_name;
            rec.ptype = ptype;
            rec.attributes = derive_attributes(t, desc, config, present);
            rec.prompt = prompt_for(rec.attributes, desc.family, ptype, id + "/" + t.class_name,
                                    config.seed, std::nullopt, &rec.fallback);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<PromptRecord> generate_prompt_records_from_masks(const DatasetDescriptor& descriptor,
                                                             const std::string& masks_dir,
                                                             prompt::PromptType ptype,
                                                             const PromptingConfig& config) {
    namespace fs = std::filesystem;
    if (!prompt::prompt_type_available(descriptor.family, ptype))
        throw Error("prompt type unavailable");

    std::map<std::string, int> class_table;
    for (size_t i = 0; i < descriptor.class_names.size(); ++i)
        class_table[descriptor.class_names[i]] = static_cast<int>(i) + 1;

    std::vector<std::string> files;
    auto collect = [&](const fs::path& dir) {
        if (!fs::is_directory(dir)) return;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.path().extension() == ".png") files.push_back(e.path().string());
    };
    for (const char* split : {"train", "val", "test"}) collect(fs::path(masks_dir) / split);
    if (files.empty()) collect(masks_dir);
    if (files.empty()) throw Error("no mask PNGs found under " + masks_dir);
    std::sort(files.begin(), files.end());

    std::vector<PromptRecord> records;
    for (const std::string& file : files) {
        const std::string id = fs::path(file).stem().string();
        LabelMask labels = read_label_png(file);
        Image dummy(labels.h, labels.w, 3);  // attributes never look at pixels

        std::vector<std::string> present;
        std::vector<std::pair<int, std::string>> ordered;
        for (const auto& [name, label] : class_table) ordered.emplace_back(label, name);
        std::sort(ordered.begin(), ordered.end());
        for (const auto& [label, name] : ordered)
            for (uint8_t v : labels.v)
                if (v == label) {
                    present.push_back(name);
                    break;
                }

        for (SampleTriplet& t : expand_multiclass(dummy, labels, class_table, config.emit_absent)) {
            t.sample_id = id;
            t.dataset = descriptor.name;
            PromptRecord rec;
            rec.sample_id = id;
            rec.class_name = t.class_name;
            rec.ptype = ptype;
            rec.attributes = derive_attributes(t, descriptor, config, present);
            rec.prompt = prompt_for(rec.attributes, descriptor.family, ptype, id + "/" + t.class_name,
                                    config.seed, std::nullopt, &rec.fallback);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<SampleTriplet> load_prompted_triplets(const DatasetHandle& handle, Split split,
                                                  PromptType ptype, const PromptingConfig& config,
                                                  std::vector<prompt::AttributeSet>* attrs_out) {
    std::vector<SampleTriplet> out;
    const DatasetDescriptor& desc = handle.descriptor();
    if (!prompt::prompt_type_available(desc.family, ptype))
        throw Error("prompt type unavailable");
    for (const std::string& id : handle.ids(split)) {
        const LabelMask labels = handle.load_label_mask(split, id);
        const Image image = handle.load_image(split, id);
        const auto present = classes_present(handle, labels);
        for (SampleTriplet& t : expand_multiclass(image, labels, handle.class_table(), config.emit_absent)) {
            t.sample_id = id;
            t.dataset = desc.name;
            const AttributeSet attrs = derive_attributes(t, desc, config, present);
            t.prompt = prompt_for(attrs, desc.family, ptype, id + "/" + t.class_name, config.seed);
            if (attrs_out) attrs_out->push_back(attrs);
            out.push_back(std::move(t));
        }
    }
    return out;
}

void write_prompt_jsonl(const std::string& path, const std::vector<PromptRecord>& records) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write prompt file: " + path);
    for (const PromptRecord& rec : records) {
        nlohmann::json attrs;
        for (const auto& [key, value] : rec.attributes.entries()) {
            if (value.parts.size() == 1) {
                attrs[prompt::attribute_name(key)] = value.parts[0];
            } else {
                attrs[prompt::attribute_name(key)] = value.parts;
            }
        }
        nlohmann::json line = {{"sample_id", rec.sample_id},
                               {"class", rec.class_name},
                               {"ptype", prompt::prompt_type_name(rec.ptype)},
                               {"prompt", rec.prompt},
                               {"attributes", attrs}};
        out << line.dump() << "\n";
    }
}

size_t apply_freetext_prompts(std::vector<SampleTriplet>& triplets,
                              const std::map<std::string, std::string>& freetext) {
    size_t overridden = 0;
    for (SampleTriplet& t : triplets) {
        auto it = freetext.find(t.sample_id);
        if (it != freetext.end()) {
            t.prompt = it->second;
            ++overridden;
        }
    }
    return overridden;
}

std::map<std::string, std::string> load_freetext_prompts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open freetext prompt file: " + path);
    const nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_object()) throw Error("freetext prompts must be a JSON object keyed by sample id");
    std::map<std::string, std::string> out;
    for (const auto& [id, text] : j.items()) {
        if (!text.is_string()) throw Error("freetext prompt for \"" + id + "\" must be a string");
        out[id] = text.get<std::string>();
    }
    return out;
}

}  // namespace vlseg::data
