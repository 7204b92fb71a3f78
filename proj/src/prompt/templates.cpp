#include "vlseg/prompt/templates.hpp"

#include <array>

namespace vlseg::prompt {

namespace {

using Key = AttributeKey;

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

// BUSI alternate phrasing describes the tumor by boundary regularity.
std::string regularity_word(const std::string& tumor_type) {
    if (tumor_type == "benign") return "regular";
    if (tumor_type == "malignant") return "irregular";
    throw Error("busi tumor_type must be \"benign\" or \"malignant\", got \"" + tumor_type + "\"");
}

size_t draw(Rng& rng, size_t n) { return static_cast<size_t>(rng() % n); }

const AttributeValue& req(const AttributeSet& attrs, Key key) { return attrs.require(key); }

std::string general_description(const std::string& fam, const AttributeSet& attrs, Rng& rng,
                                const GeneralDescriptionBank& bank) {
    if (const AttributeValue* v = attrs.find(Key::general_class_info)) return v->joined();
    const auto& descs = bank.descriptions(fam);
    return descs[draw(rng, descs.size())];
}

std::string compose_photographic(const std::string& fam, PromptType ptype, const AttributeSet& attrs,
                                 Rng& rng, const GeneralDescriptionBank& bank) {
    const std::string cls = req(attrs, Key::class_keyword).joined();
    switch (ptype) {
        case PromptType::P1:
            return cls;
        case PromptType::P2:
            return req(attrs, Key::shape).joined() + " " + cls;
        case PromptType::P3:
            return req(attrs, Key::color).joined() + " " + req(attrs, Key::shape).joined() + " " + cls;
        default:
            break;
    }
    const auto stack = [&](bool with_number) {
        std::string s;
        if (with_number) s += req(attrs, Key::number).joined() + " ";
        s += req(attrs, Key::size).joined() + " " + req(attrs, Key::color).joined() + " " +
             req(attrs, Key::shape).joined() + " " + cls;
        return s;
    };
    switch (ptype) {
        case PromptType::P4:
            return stack(false);
        case PromptType::P5:
            return stack(true);
        case PromptType::P6:
            return stack(true) + ", located in the " + req(attrs, Key::location).joined() + " of the image";
        case PromptType::P7:
            return cls + ", which is " + general_description(fam, attrs, rng, bank);
        case PromptType::P8:
            return stack(true) + ", which is " + general_description(fam, attrs, rng, bank);
        case PromptType::P9:
            return stack(true) + ", which is " + general_description(fam, attrs, rng, bank) +
                   " located in the " + req(attrs, Key::location).joined() + " of the image";
        default:
            throw Error("prompt type unavailable");
    }
}

std::string compose_chexlocalize(PromptType ptype, const AttributeSet& attrs) {
    const std::string cls = req(attrs, Key::class_keyword).joined();
    switch (ptype) {
        case PromptType::P1:
            return cls + " in a chest Xray.";
        case PromptType::P2:
            return cls + " in the " + req(attrs, Key::view).joined() + " view of a Chest Xray.";
        case PromptType::P3:
            return cls + " of shape " + req(attrs, Key::shape).joined() + " in the " +
                   req(attrs, Key::view).joined() + " view of a Chest Xray.";
        case PromptType::P4:
        case PromptType::P5: {
            std::string s = cls + " of shape " + req(attrs, Key::shape).joined() + ", and located in " +
                            req(attrs, Key::location).joined() + " of the " + req(attrs, Key::view).joined() +
                            " view of a Chest Xray.";
            if (ptype == PromptType::P5)
                s += " " + req(attrs, Key::pathology).joined() + " are present.";
            return s;
        }
        case PromptType::P6:
            return cls + " in a Chest Xray. " + req(attrs, Key::pathology).joined() + " are present.";
        default:
            throw Error("prompt type unavailable");
    }
}

std::string compose_camus(PromptType ptype, const AttributeSet& attrs, Rng& rng) {
    const std::string cls = req(attrs, Key::class_keyword).joined();
    // Each level has an "of the heart" and an "in the cardiac ultrasound" phrasing.
    const bool heart = draw(rng, 2) == 0;
    const std::string place = heart ? "of the heart" : "in the cardiac ultrasound";
    if (ptype == PromptType::P1) return cls + " " + place;

    std::string head = cls;
    if (ptype == PromptType::P7) head += " of " + req(attrs, Key::shape).joined() + " shape";
    std::string s = head + " in " + req(attrs, Key::view).joined() + " view " + place;
    if (ptype == PromptType::P2) return s + ".";
    s += " at the end of the " + req(attrs, Key::cardiac_cycle).joined() + " cycle";
    if (ptype == PromptType::P3) return s + ".";
    s += " of a ";
    if (ptype != PromptType::P4) s += req(attrs, Key::age).joined() + " ";
    s += req(attrs, Key::gender).joined();
    if (ptype == PromptType::P4 || ptype == PromptType::P5) return s + ".";
    s += " with " + req(attrs, Key::image_quality).joined() + " image quality";
    return s + ".";
}

std::string compose_busi(PromptType ptype, const AttributeSet& attrs, Rng& rng) {
    const std::string cls = req(attrs, Key::class_keyword).joined();
    constexpr const char* kSuffix = " in the breast ultrasound image.";
    if (ptype == PromptType::P1) {
        const AttributeValue* num = attrs.find(Key::number);
        if (num && num->joined() == "no") return "No " + cls + kSuffix;
        return capitalize(cls) + kSuffix;
    }

    // Two phrasings per level: tumor type ("benign") or regularity ("regular-shaped").
    const bool by_type = draw(rng, 2) == 0;
    const std::string type = req(attrs, Key::tumor_type).joined();
    if (ptype == PromptType::P2) {
        const std::string word = by_type ? type : regularity_word(type) + "-shaped";
        return capitalize(word) + " " + cls + kSuffix;
    }

    const std::string number = req(attrs, Key::number).joined();
    const std::string noun = number == "one" ? cls : cls + "s";
    const std::string typeword = by_type ? type : regularity_word(type) + "-shaped";
    std::string s = capitalize(number);
    switch (ptype) {
        case PromptType::P3:
            return s + " " + typeword + " " + noun + kSuffix;
        case PromptType::P4:
            return s + " " + req(attrs, Key::size).joined() + " " + typeword + " " + noun + kSuffix;
        case PromptType::P5:
            return s + " " + req(attrs, Key::size).joined() + " " + typeword + " " + noun + " at the " +
                   req(attrs, Key::location).joined() + kSuffix;
        case PromptType::P6: {
            // With the shape slot present, the regularity phrasing drops "-shaped".
            const std::string short_type = by_type ? type : regularity_word(type);
            return s + " " + req(attrs, Key::size).joined() + " " + req(attrs, Key::shape).joined() + " " +
                   short_type + " " + noun + " at the " + req(attrs, Key::location).joined() + kSuffix;
        }
        default:
            throw Error("prompt type unavailable");
    }
}

}  // namespace

std::string prompt_type_name(PromptType p) { return "P" + std::to_string(static_cast<int>(p)); }

PromptType prompt_type_from_name(const std::string& name) {
    if (name.size() == 2 && name[0] == 'P' && name[1] >= '0' && name[1] <= '9')
        return static_cast<PromptType>(name[1] - '0');
    throw Error("unknown prompt type: " + name);
}

bool is_photographic_family(const std::string& fam) {
    return fam == family::endoscopy || fam == family::isic || fam == family::dfu;
}

bool is_known_family(const std::string& fam) {
    return is_photographic_family(fam) || fam == family::camus || fam == family::busi ||
           fam == family::chexlocalize || fam == family::freetext;
}

PromptType max_prompt_type(const std::string& fam) {
    if (is_photographic_family(fam)) return PromptType::P9;
    if (fam == family::camus) return PromptType::P7;
    if (fam == family::busi || fam == family::chexlocalize) return PromptType::P6;
    if (fam == family::freetext) return PromptType::P1;
    throw Error("unknown prompt family: " + fam);
}

bool prompt_type_available(const std::string& fam, PromptType ptype) {
    return static_cast<int>(ptype) <= static_cast<int>(max_prompt_type(fam));
}

std::vector<PromptType> available_prompt_types(const std::string& fam) {
    std::vector<PromptType> out;
    for (int i = 0; i <= static_cast<int>(max_prompt_type(fam)); ++i)
        out.push_back(static_cast<PromptType>(i));
    return out;
}

std::vector<AttributeKey> required_attributes(const std::string& fam, PromptType ptype) {
    if (!prompt_type_available(fam, ptype)) throw Error("prompt type unavailable");
    if (ptype == PromptType::P0 || fam == family::freetext) return {};
    const int p = static_cast<int>(ptype);
    if (is_photographic_family(fam)) {
        switch (ptype) {
            case PromptType::P1: return {Key::class_keyword};
            case PromptType::P2: return {Key::shape, Key::class_keyword};
            case PromptType::P3: return {Key::color, Key::shape, Key::class_keyword};
            case PromptType::P4: return {Key::size, Key::color, Key::shape, Key::class_keyword};
            case PromptType::P5: return {Key::number, Key::size, Key::color, Key::shape, Key::class_keyword};
            case PromptType::P6:
                return {Key::number, Key::size, Key::color, Key::shape, Key::class_keyword, Key::location};
            case PromptType::P7: return {Key::class_keyword, Key::general_class_info};
            case PromptType::P8:
                return {Key::number, Key::size, Key::color, Key::shape, Key::class_keyword,
                        Key::general_class_info};
            default:
                return {Key::number, Key::size, Key::color, Key::shape, Key::class_keyword,
                        Key::general_class_info, Key::location};
        }
    }
    if (fam == family::chexlocalize) {
        switch (ptype) {
            case PromptType::P1: return {Key::class_keyword};
            case PromptType::P2: return {Key::class_keyword, Key::view};
            case PromptType::P3: return {Key::class_keyword, Key::shape, Key::view};
            case PromptType::P4: return {Key::class_keyword, Key::shape, Key::location, Key::view};
            case PromptType::P5:
                return {Key::class_keyword, Key::shape, Key::location, Key::view, Key::pathology};
            default:
                return {Key::class_keyword, Key::pathology};
        }
    }
    if (fam == family::camus) {
        std::vector<Key> keys = {Key::class_keyword};
        if (p >= 2) keys.push_back(Key::view);
        if (p >= 3) keys.push_back(Key::cardiac_cycle);
        if (p >= 4) keys.push_back(Key::gender);
        if (p >= 5) keys.push_back(Key::age);
        if (p >= 6) keys.push_back(Key::image_quality);
        if (p >= 7) keys.push_back(Key::shape);
        return keys;
    }
    // busi
    std::vector<Key> keys = {Key::class_keyword};
    if (p >= 2) keys.push_back(Key::tumor_type);
    if (p >= 3) keys.push_back(Key::number);
    if (p >= 4) keys.push_back(Key::size);
    if (p >= 5) keys.push_back(Key::location);
    if (p >= 6) keys.push_back(Key::shape);
    return keys;
}

const GeneralDescriptionBank& GeneralDescriptionBank::builtin() {
    static const GeneralDescriptionBank bank = [] {
        GeneralDescriptionBank b;
        b.set(family::endoscopy,
              {"a projecting growth of tissue", "often a bumpy flesh in rectum",
               "a small lump in the lining of colon",
               "a tissue growth that often resemble mushroom-like stalks",
               "an abnormal growth of tissues projecting from a mucous membrane"});
        b.set(family::isic,
              {"a spot with dark speckles", "a spot with irregular texture",
               "a dark sore with irregular texture", "an irregular sore with speckles",
               "a rough wound on skin"});
        b.set(family::dfu,
              {"a wound in foot and toes", "a sore in foot and toes", "a sore in skin of foot and toe",
               "an abnormality in foot and toes", "an open sore or lesion in foot and toes"});
        return b;
    }();
    return bank;
}

const std::vector<std::string>& GeneralDescriptionBank::descriptions(const std::string& fam) const {
    auto it = bank_.find(fam);
    if (it == bank_.end()) throw Error("no description bank for family: " + fam);
    return it->second;
}

void GeneralDescriptionBank::set(const std::string& fam, std::vector<std::string> descriptions) {
    if (descriptions.size() != 5) throw Error("description bank requires exactly 5 entries");
    bank_[fam] = std::move(descriptions);
}

std::string compose_prompt(const std::string& fam, PromptType ptype, const AttributeSet& attrs, Rng& rng,
                           const GeneralDescriptionBank& bank) {
    if (!is_known_family(fam)) throw Error("unknown prompt family: " + fam);
    if (ptype == PromptType::P0) return "";
    if (fam == family::freetext)
        throw Error("freetext prompts bypass the template engine");
    if (!prompt_type_available(fam, ptype)) throw Error("prompt type unavailable");
    if (is_photographic_family(fam)) return compose_photographic(fam, ptype, attrs, rng, bank);
    if (fam == family::chexlocalize) return compose_chexlocalize(ptype, attrs);
    if (fam == family::camus) return compose_camus(ptype, attrs, rng);
    return compose_busi(ptype, attrs, rng);
}

}  // namespace vlseg::prompt
