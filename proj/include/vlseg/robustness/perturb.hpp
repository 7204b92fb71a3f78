#pragma once

#include <map>
#include <string>
#include <vector>

#include "vlseg/prompt/templates.hpp"

namespace vlseg::robustness {

enum class PerturbMode { identity, random_word, opposite, class_name_only, swap_within_dataset };

PerturbMode perturb_mode_from_name(const std::string& name);
std::string perturb_mode_name(PerturbMode mode);

struct PerturbationSpec {
    PerturbMode mode = PerturbMode::identity;
    prompt::AttributeKey target = prompt::AttributeKey::size;
    uint64_t seed = 0;
    // Observed value set of the target attribute across the dataset
    // (swap_within_dataset draws a different value from it).
    std::vector<std::string> value_pool;

    // CSV label, e.g. "opposite:location".
    std::string label() const;
};

// Semantic antonyms per attribute value ("large" <-> "small"). Involutive
// where both directions are listed; requesting an unmapped value throws.
class OppositeMap {
public:
    static const OppositeMap& builtin();

    bool has(const std::string& value) const { return map_.count(value) != 0; }
    const std::string& opposite(const std::string& value) const;
    void set(const std::string& a, const std::string& b, bool both_directions = true);
    const std::map<std::string, std::string>& entries() const { return map_; }

private:
    std::map<std::string, std::string> map_;
};

// 64 fixed rare English words, disjoint from every attribute vocabulary.
const std::vector<std::string>& uncommon_words();

// Applies the perturbation to the attribute set and re-instantiates the template.
// Only the targeted attribute's surface form changes; identity reproduces
// the base prompt byte for byte given the same compose rng stream.
std::string perturb_prompt(const prompt::AttributeSet& attrs, const std::string& family,
                           prompt::PromptType ptype, const PerturbationSpec& spec, Rng& compose_rng,
                           const OppositeMap& opposites = OppositeMap::builtin());

// Convenience overload seeding the compose stream from the perturbation seed.
std::string perturb_prompt(const prompt::AttributeSet& attrs, const std::string& family,
                           prompt::PromptType ptype, const PerturbationSpec& spec);

}  // namespace vlseg::robustness
