#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vlseg/common.hpp"

namespace vlseg::prompt {

// The 14 prompt attributes a1-a14.
enum class AttributeKey {
    class_keyword,       // a1
    shape,               // a2
    color,               // a3
    size,                // a4
    number,              // a5
    location,            // a6
    general_class_info,  // a7
    view,                // a8
    pathology,           // a9
    cardiac_cycle,       // a10
    gender,              // a11
    age,                 // a12
    image_quality,       // a13
    tumor_type,          // a14
};

inline constexpr int kAttributeCount = 14;

const std::vector<AttributeKey>& all_attribute_keys();
std::string attribute_name(AttributeKey key);
std::optional<AttributeKey> attribute_from_name(const std::string& name);

enum class Provenance { mask_derived, sidecar, bank, literal };

std::string provenance_name(Provenance p);

// A single attribute value. Location and pathology may carry several
// components; scalar attributes hold exactly one part.
struct AttributeValue {
    std::vector<std::string> parts;
    Provenance prov = Provenance::literal;

    // Parts joined with ", " — the composed surface form ("center, left").
    std::string joined() const;
};

class AttributeSet {
public:
    void set(AttributeKey key, std::string value, Provenance prov = Provenance::literal);
    void set(AttributeKey key, std::vector<std::string> parts, Provenance prov = Provenance::literal);
    void erase(AttributeKey key) { entries_.erase(key); }

    bool has(AttributeKey key) const { return entries_.count(key) != 0; }
    const AttributeValue* find(AttributeKey key) const;
    // Throws Error naming the attribute when absent.
    const AttributeValue& require(AttributeKey key) const;

    const std::map<AttributeKey, AttributeValue>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    // Adds every entry of `other` that is not already present.
    void merge_missing(const AttributeSet& other);

private:
    std::map<AttributeKey, AttributeValue> entries_;
};

// number/size/location attributes computed from a binary mask.
struct MaskDerivedAttributes {
    int component_count = 0;
    std::string number_word;
    std::string size_word;
    std::vector<std::string> location_words;
    double area_ratio = 0.0;
    std::vector<size_t> component_areas;  // kept components, discovery order
};

struct ExtractionConfig {
    double small_max = 0.10;   // area_ratio below this -> "small"
    double medium_max = 0.30;  // below this -> "medium", else "large"
    int grid_rows = 3;
    int grid_cols = 3;
    int connectivity = 8;  // 4 or 8
    double min_component_area_frac = 0.001;
};

// "one".."ten", then "many"; zero maps to "no".
std::string number_word(int count);

}  // namespace vlseg::prompt
