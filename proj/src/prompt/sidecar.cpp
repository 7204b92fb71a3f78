#include "vlseg/prompt/sidecar.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace vlseg::prompt {

namespace {

using nlohmann::json;

// SAX walker that records top-level object keys so duplicates are caught;
// json::parse silently keeps only the last occurrence.
struct TopLevelKeyCounter : json::json_sax_t {
    int depth = 0;
    std::set<std::string> seen;
    std::string duplicate;

    bool key(string_t& val) override {
        if (depth == 1 && !seen.insert(val).second && duplicate.empty()) duplicate = val;
        return true;
    }
    bool start_object(std::size_t) override {
        ++depth;
        return true;
    }
    bool end_object() override {
        --depth;
        return true;
    }
    bool start_array(std::size_t) override { return true; }
    bool end_array() override { return true; }
    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
        throw Error("sidecar parse error at byte " + std::to_string(pos) + ": " + ex.what());
    }
};

std::string valid_key_list() {
    std::string out;
    for (AttributeKey key : sidecar_allowed_keys()) {
        if (!out.empty()) out += ", ";
        out += attribute_name(key);
    }
    return out;
}

}  // namespace

const std::vector<AttributeKey>& sidecar_allowed_keys() {
    static const std::vector<AttributeKey> keys = {
        AttributeKey::shape,         AttributeKey::color,  AttributeKey::age,
        AttributeKey::gender,        AttributeKey::view,   AttributeKey::cardiac_cycle,
        AttributeKey::image_quality, AttributeKey::tumor_type, AttributeKey::pathology,
    };
    return keys;
}

std::map<std::string, AttributeSet> parse_attribute_sidecar(const std::string& json_text) {
    TopLevelKeyCounter counter;
    json::sax_parse(json_text, &counter);
    if (!counter.duplicate.empty()) throw Error("duplicate sample id in sidecar: " + counter.duplicate);

    const json root = json::parse(json_text);
    if (!root.is_object()) throw Error("sidecar must be a JSON object keyed by sample id");

    const auto& allowed = sidecar_allowed_keys();
    std::map<std::string, AttributeSet> out;
    for (const auto& [sample_id, fields] : root.items()) {
        if (!fields.is_object())
            throw Error("sidecar entry for \"" + sample_id + "\" must be an object");
        AttributeSet attrs;
        for (const auto& [name, value] : fields.items()) {
            const auto key = attribute_from_name(name);
            const bool ok = key && std::find(allowed.begin(), allowed.end(), *key) != allowed.end();
            if (!ok)
                throw Error("unknown attribute key \"" + name + "\"; valid keys: " + valid_key_list());
            std::vector<std::string> parts;
            if (value.is_string()) {
                parts.push_back(value.get<std::string>());
            } else if (value.is_array()) {
                for (const auto& item : value) {
                    if (!item.is_string())
                        throw Error("attribute \"" + name + "\" for \"" + sample_id +
                                    "\" must contain strings");
                    parts.push_back(item.get<std::string>());
                }
            } else {
                throw Error("attribute \"" + name + "\" for \"" + sample_id +
                            "\" must be a string or list of strings");
            }
            attrs.set(*key, std::move(parts), Provenance::sidecar);
        }
        out.emplace(sample_id, std::move(attrs));
    }
    return out;
}

std::map<std::string, AttributeSet> load_attribute_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open sidecar file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_attribute_sidecar(buf.str());
}

}  // namespace vlseg::prompt
