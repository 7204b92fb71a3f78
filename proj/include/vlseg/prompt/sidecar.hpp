#pragma once

#include <map>
#include <string>

#include "vlseg/prompt/attributes.hpp"

namespace vlseg::prompt {

// Attribute keys a sidecar file may carry. Mask-derived attributes
// (number, size, location) and the class keyword are never accepted, so a
// sidecar can never override mask-derived values.
const std::vector<AttributeKey>& sidecar_allowed_keys();

// Parses a JSON map {sample id -> {attribute -> value-or-list}}.
// Throws on unknown attribute keys and on duplicate sample ids.
std::map<std::string, AttributeSet> load_attribute_sidecar(const std::string& path);
std::map<std::string, AttributeSet> parse_attribute_sidecar(const std::string& json_text);

}  // namespace vlseg::prompt
