#include "vlseg/prompt/attributes.hpp"

#include <array>

namespace vlseg::prompt {

namespace {

constexpr std::array<const char*, kAttributeCount> kNames = {
    "class_keyword", "shape",     "color",         "size",   "number", "location", "general_class_info",
    "view",          "pathology", "cardiac_cycle", "gender", "age",    "image_quality", "tumor_type",
};

}  // namespace

const std::vector<AttributeKey>& all_attribute_keys() {
    static const std::vector<AttributeKey> keys = [] {
        std::vector<AttributeKey> v;
        for (int i = 0; i < kAttributeCount; ++i) v.push_back(static_cast<AttributeKey>(i));
        return v;
    }();
    return keys;
}

std::string attribute_name(AttributeKey key) { return kNames[static_cast<int>(key)]; }

std::optional<AttributeKey> attribute_from_name(const std::string& name) {
    for (int i = 0; i < kAttributeCount; ++i)
        if (name == kNames[i]) return static_cast<AttributeKey>(i);
    return std::nullopt;
}

std::string provenance_name(Provenance p) {
    switch (p) {
        case Provenance::mask_derived: return "mask_derived";
        case Provenance::sidecar: return "sidecar";
        case Provenance::bank: return "bank";
        case Provenance::literal: return "literal";
    }
    return "literal";
}

std::string AttributeValue::joined() const {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

void AttributeSet::set(AttributeKey key, std::string value, Provenance prov) {
    entries_[key] = AttributeValue{{std::move(value)}, prov};
}

void AttributeSet::set(AttributeKey key, std::vector<std::string> parts, Provenance prov) {
    entries_[key] = AttributeValue{std::move(parts), prov};
}

const AttributeValue* AttributeSet::find(AttributeKey key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

const AttributeValue& AttributeSet::require(AttributeKey key) const {
    const AttributeValue* v = find(key);
    if (!v) throw Error("missing required attribute: " + attribute_name(key));
    return *v;
}

void AttributeSet::merge_missing(const AttributeSet& other) {
    for (const auto& [key, value] : other.entries())
        if (!has(key)) entries_[key] = value;
}

std::string number_word(int count) {
    static const std::array<const char*, 11> words = {"no",  "one", "two",   "three", "four", "five",
                                                      "six", "seven", "eight", "nine",  "ten"};
    if (count < 0) throw Error("negative component count");
    if (count <= 10) return words[static_cast<size_t>(count)];
    return "many";
}

}  // namespace vlseg::prompt
