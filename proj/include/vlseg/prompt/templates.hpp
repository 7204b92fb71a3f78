#pragma once

#include <map>
#include <string>
#include <vector>

#include "vlseg/prompt/attributes.hpp"

namespace vlseg::prompt {

// Graded prompt templates. P0 is always the empty string.
enum class PromptType { P0, P1, P2, P3, P4, P5, P6, P7, P8, P9 };

inline constexpr int kPromptTypeCount = 10;

std::string prompt_type_name(PromptType p);
PromptType prompt_type_from_name(const std::string& name);
inline int prompt_type_index(PromptType p) { return static_cast<int>(p); }

// Template families. The photographic families share one template set and
// differ only in class keyword and description bank.
namespace family {
inline constexpr const char* endoscopy = "endoscopy";
inline constexpr const char* isic = "isic";
inline constexpr const char* dfu = "dfu";
inline constexpr const char* camus = "camus";
inline constexpr const char* busi = "busi";
inline constexpr const char* chexlocalize = "chexlocalize";
inline constexpr const char* freetext = "freetext";
}  // namespace family

bool is_photographic_family(const std::string& family);
bool is_known_family(const std::string& family);

// Highest prompt type available for a family (P9 photographic, P7 CAMUS,
// P6 BUSI and CheXlocalize, P1 freetext).
PromptType max_prompt_type(const std::string& family);
bool prompt_type_available(const std::string& family, PromptType ptype);
std::vector<PromptType> available_prompt_types(const std::string& family);

// Attributes a template instantiation needs, in slot order.
std::vector<AttributeKey> required_attributes(const std::string& family, PromptType ptype);

// Five general class descriptions per photographic family.
class GeneralDescriptionBank {
public:
    static const GeneralDescriptionBank& builtin();

    const std::vector<std::string>& descriptions(const std::string& family) const;
    bool has(const std::string& family) const { return bank_.count(family) != 0; }

    void set(const std::string& family, std::vector<std::string> descriptions);

private:
    std::map<std::string, std::vector<std::string>> bank_;
};

// Instantiates the (family, ptype) template with the given attributes.
// The generator resolves the description-bank draw and multi-phrasing
// choices; identical (attrs, seed) inputs give byte-identical strings.
std::string compose_prompt(const std::string& fam, PromptType ptype, const AttributeSet& attrs, Rng& rng,
                           const GeneralDescriptionBank& bank = GeneralDescriptionBank::builtin());

}  // namespace vlseg::prompt
