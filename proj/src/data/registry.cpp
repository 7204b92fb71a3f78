#include "vlseg/data/registry.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "vlseg/png_io.hpp"
#include "vlseg/prompt/templates.hpp"

namespace vlseg::data {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetHandle::DatasetHandle(DatasetDescriptor descriptor, std::string root)
    : desc_(std::move(descriptor)), root_(std::move(root)) {
    if (!fs::is_directory(root_)) throw Error("dataset root does not exist: " + root_);

    // class table: classes.json when present, else labels 1..n in declared order
    const fs::path classes_file = fs::path(root_) / "classes.json";
    if (fs::exists(classes_file)) {
        std::ifstream in(classes_file);
        json j = json::parse(in);
        for (const auto& [name, label] : j.items()) class_table_[name] = label.get<int>();
        for (const auto& [name, label] : class_table_) {
            if (std::find(desc_.class_names.begin(), desc_.class_names.end(), name) ==
                desc_.class_names.end())
                warnings_.push_back("classes.json entry \"" + name + "\" not in descriptor class list");
            if (label <= 0) throw Error("class labels must be positive: " + name);
        }
    } else {
        for (size_t i = 0; i < desc_.class_names.size(); ++i)
            class_table_[desc_.class_names[i]] = static_cast<int>(i) + 1;
    }

    size_t total = 0;
    for (Split s : kSplits) {
        const fs::path img_dir = fs::path(root_) / "images" / split_name(s);
        const fs::path manifest = fs::path(root_) / "splits" / (split_name(s) + ".txt");
        auto& ids = ids_[static_cast<size_t>(s)];
        if (fs::exists(manifest)) {
            // plain-text id list, one per line, order preserved
            std::ifstream in(manifest);
            std::string line;
            while (std::getline(in, line)) {
                while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
                if (!line.empty()) ids.push_back(line);
            }
            for (const std::string& id : ids)
                if (!fs::exists(img_dir / (id + ".png")))
                    throw Error("manifest lists missing image \"" + id + "\" in " + desc_.name + "/" +
                                split_name(s));
        } else if (fs::is_directory(img_dir)) {
            for (const auto& entry : fs::directory_iterator(img_dir))
                if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
            std::sort(ids.begin(), ids.end());
        }
        for (const std::string& id : ids) {
            const fs::path mask = fs::path(root_) / "masks" / split_name(s) / (id + ".png");
            if (!fs::exists(mask))
                throw Error("missing mask for image \"" + id + "\" in " + desc_.name + "/" +
                            split_name(s));
        }
        total += ids.size();
        if (desc_.test_only && s != Split::test && !ids.empty())
            throw Error(desc_.name + " is test-only but has " + std::to_string(ids.size()) + " " +
                        split_name(s) + " samples");
        const int expected = desc_.split_size(s);
        if (expected != static_cast<int>(ids.size())) {
            warnings_.push_back("split count mismatch for " + desc_.name + "/" + split_name(s) +
                                ": expected " + std::to_string(expected) + ", observed " +
                                std::to_string(ids.size()));
        }
    }
    if (total == 0) throw Error("no samples found under " + root_);
    for (const std::string& w : warnings_) std::cerr << "[vlseg] warning: " << w << "\n";
}

Image DatasetHandle::load_image(Split s, const std::string& id) const {
    return read_image_png((fs::path(root_) / "images" / split_name(s) / (id + ".png")).string());
}

LabelMask DatasetHandle::load_label_mask(Split s, const std::string& id) const {
    return read_label_png((fs::path(root_) / "masks" / split_name(s) / (id + ".png")).string());
}

std::vector<SampleTriplet> DatasetHandle::load_triplets(Split s, const std::string& id,
                                                        bool emit_absent) const {
    auto triplets = expand_multiclass(load_image(s, id), load_label_mask(s, id), class_table_, emit_absent);
    for (SampleTriplet& t : triplets) {
        t.sample_id = id;
        t.dataset = desc_.name;
    }
    return triplets;
}

std::shared_ptr<DatasetHandle> register_dataset(const DatasetDescriptor& descriptor,
                                                const std::string& root) {
    return std::make_shared<DatasetHandle>(descriptor, root);
}

std::vector<SampleTriplet> expand_multiclass(const Image& image, const LabelMask& labels,
                                             const std::map<std::string, int>& class_table,
                                             bool emit_absent) {
    if (labels.h != image.h || labels.w != image.w) throw Error("mask dimensions must equal image");

    std::vector<int> known_labels;
    for (const auto& [name, label] : class_table) known_labels.push_back(label);
    for (uint8_t v : labels.v) {
        if (v == 0) continue;
        if (std::find(known_labels.begin(), known_labels.end(), static_cast<int>(v)) ==
            known_labels.end())
            throw Error("unknown label in mask: " + std::to_string(static_cast<int>(v)));
    }

    // emit in ascending label order for a stable triplet sequence
    std::vector<std::pair<int, std::string>> ordered;
    for (const auto& [name, label] : class_table) ordered.emplace_back(label, name);
    std::sort(ordered.begin(), ordered.end());

    std::vector<SampleTriplet> out;
    for (const auto& [label, name] : ordered) {
        Mask m(labels.h, labels.w);
        size_t fg = 0;
        for (size_t i = 0; i < labels.v.size(); ++i) {
            m.v[i] = labels.v[i] == label ? 1 : 0;
            fg += m.v[i];
        }
        if (fg == 0 && !emit_absent) continue;
        SampleTriplet t;
        t.image = image;
        t.mask = std::move(m);
        t.class_name = name;
        out.push_back(std::move(t));
    }
    return out;
}

std::string pool_kind_name(PoolKind kind) { return kind == PoolKind::all ? "all" : "endoscopy-only"; }

PooledDataset::PooledDataset(std::vector<std::shared_ptr<DatasetHandle>> members, PoolKind kind,
                             uint64_t seed)
    : members_(std::move(members)), kind_(kind) {
    if (members_.empty()) throw Error("pool requires at least one dataset");
    for (size_t i = 0; i < members_.size(); ++i) {
        const DatasetDescriptor& d = members_[i]->descriptor();
        if (kind_ == PoolKind::endoscopy_only && d.family != prompt::family::endoscopy)
            throw Error("endoscopy-only pool rejects dataset: " + d.name);
        if (d.test_only)
            throw Error("cannot pool test-only dataset into a training pool: " + d.name);
        for (Split s : kSplits)
            for (const std::string& id : members_[i]->ids(s))
                entries_[static_cast<size_t>(s)].push_back(Entry{static_cast<int>(i), id});
    }
    for (Split s : kSplits) {
        auto& es = entries_[static_cast<size_t>(s)];
        Rng rng(derive_seed(seed, "pool_" + split_name(s)));
        for (size_t i = es.size(); i > 1; --i) std::swap(es[i - 1], es[rng() % i]);
    }
}

PooledDataset pool(std::vector<std::shared_ptr<DatasetHandle>> members, PoolKind kind, uint64_t seed) {
    return PooledDataset(std::move(members), kind, seed);
}

}  // namespace vlseg::data
