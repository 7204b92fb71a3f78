#include "vlseg/robustness/perturb.hpp"

#include <algorithm>

namespace vlseg::robustness {

using prompt::AttributeKey;
using prompt::AttributeSet;

PerturbMode perturb_mode_from_name(const std::string& name) {
    if (name == "identity") return PerturbMode::identity;
    if (name == "random_word") return PerturbMode::random_word;
    if (name == "opposite") return PerturbMode::opposite;
    if (name == "class_name_only") return PerturbMode::class_name_only;
    if (name == "swap_within_dataset") return PerturbMode::swap_within_dataset;
    throw Error("unknown perturbation mode: " + name);
}

std::string perturb_mode_name(PerturbMode mode) {
    switch (mode) {
        case PerturbMode::identity: return "identity";
        case PerturbMode::random_word: return "random_word";
        case PerturbMode::opposite: return "opposite";
        case PerturbMode::class_name_only: return "class_name_only";
        case PerturbMode::swap_within_dataset: return "swap_within_dataset";
    }
    return "identity";
}

std::string PerturbationSpec::label() const {
    if (mode == PerturbMode::identity || mode == PerturbMode::class_name_only)
        return perturb_mode_name(mode);
    return perturb_mode_name(mode) + ":" + prompt::attribute_name(target);
}

const OppositeMap& OppositeMap::builtin() {
    static const OppositeMap map = [] {
        OppositeMap m;
        // size
        m.set("large", "small");
        m.set("medium", "small", false);
        // location
        m.set("left", "right");
        m.set("top", "bottom");
        m.set("top left", "bottom right");
        m.set("top right", "bottom left");
        m.set("center", "top left", false);
        // color
        m.set("pink", "green");
        m.set("red", "blue");
        m.set("white", "black");
        m.set("yellow", "purple");
        m.set("brown", "gray");
        m.set("bright", "dark");
        // shape
        m.set("round", "irregular");
        m.set("oval", "square");
        m.set("square-shaped", "irregular-shaped");
        m.set("triangular", "spherical");
        m.set("circular", "elongated");
        m.set("rectangle", "blob", false);
        // number
        m.set("one", "many");
        // tumor type
        m.set("benign", "malignant");
        // view
        m.set("frontal", "lateral");
        m.set("two-chamber", "four-chamber");
        // cardiac cycle
        m.set("diastole", "systole");
        // gender
        m.set("female", "male");
        // image quality
        m.set("good", "poor");
        return m;
    }();
    return map;
}

const std::string& OppositeMap::opposite(const std::string& value) const {
    auto it = map_.find(value);
    if (it == map_.end()) throw Error("no opposite mapped for value: " + value);
    return it->second;
}

void OppositeMap::set(const std::string& a, const std::string& b, bool both_directions) {
    map_[a] = b;
    if (both_directions) map_[b] = a;
}

const std::vector<std::string>& uncommon_words() {
    static const std::vector<std::string> words = {
        "absquatulate", "anfractuous", "borborygmus", "brontide", "cachinnate", "catawampus",
        "clinquant", "crepuscular", "defenestration", "deipnosophist", "eleemosynary", "embrangle",
        "famulus", "fandango", "flibbertigibbet", "funambulist", "gallimaufry", "gobbledygook",
        "gongoozler", "grimalkin", "hobbledehoy", "hornswoggle", "hurdygurdy", "incunabula",
        "jackanapes", "jiggerypokery", "kerfuffle", "lagniappe", "lollygag", "logomachy", "mumpsimus",
        "nudiustertian", "omphaloskepsis", "onomatopoeia", "operose", "pettifogger", "philodox",
        "pilgarlic", "popinjay", "persiflage", "quockerwodger", "rambunctious", "ranivorous",
        "sesquipedalian", "skulduggery", "slubberdegullion", "snollygoster", "sprachgefuhl",
        "taradiddle", "tatterdemalion", "tintinnabulation", "titivate", "ultracrepidarian", "usufruct",
        "vagarious", "velleity", "widdershins", "williwaw", "woebegone", "xenoglossy", "yarborough",
        "zeugma", "zoanthropy", "zymurgy"};
    return words;
}

std::string perturb_prompt(const AttributeSet& attrs, const std::string& family,
                           prompt::PromptType ptype, const PerturbationSpec& spec, Rng& compose_rng,
                           const OppositeMap& opposites) {
    switch (spec.mode) {
        case PerturbMode::identity:
            return prompt::compose_prompt(family, ptype, attrs, compose_rng);
        case PerturbMode::class_name_only:
            return prompt::compose_prompt(family, prompt::PromptType::P1, attrs, compose_rng);
        default:
            break;
    }

    const prompt::AttributeValue* current = attrs.find(spec.target);
    if (!current) return prompt::compose_prompt(family, ptype, attrs, compose_rng);

    AttributeSet modified = attrs;
    Rng pert_rng(derive_seed(spec.seed, "perturb"));
    if (spec.mode == PerturbMode::random_word) {
        const auto& words = uncommon_words();
        modified.set(spec.target, words[pert_rng() % words.size()], current->prov);
    } else if (spec.mode == PerturbMode::opposite) {
        std::vector<std::string> parts;
        for (const std::string& p : current->parts) parts.push_back(opposites.opposite(p));
        modified.set(spec.target, std::move(parts), current->prov);
    } else {  // swap_within_dataset
        std::vector<std::string> candidates;
        for (const std::string& v : spec.value_pool)
            if (v != current->joined()) candidates.push_back(v);
        if (candidates.empty())
            throw Error("swap_within_dataset: no alternative value for attribute " +
                        prompt::attribute_name(spec.target));
        modified.set(spec.target, candidates[pert_rng() % candidates.size()], current->prov);
    }
    return prompt::compose_prompt(family, ptype, modified, compose_rng);
}

std::string perturb_prompt(const AttributeSet& attrs, const std::string& family,
                           prompt::PromptType ptype, const PerturbationSpec& spec) {
    Rng compose_rng(derive_seed(spec.seed, "compose"));
    return perturb_prompt(attrs, family, ptype, spec, compose_rng);
}

}  // namespace vlseg::robustness
