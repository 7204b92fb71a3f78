#include "vlseg/nn/serialize.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace vlseg::nn {

namespace {

constexpr char kMagic[8] = {'V', 'L', 'S', 'E', 'G', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

using nlohmann::json;

}  // namespace

void save_tensors(const std::string& path, const TensorMap& tensors, const std::string& metadata_json) {
    json index;
    index["version"] = kVersion;
    index["metadata"] = json::parse(metadata_json);
    json entries = json::array();
    for (const auto& [name, t] : tensors) {
        entries.push_back({{"name", name}, {"shape", t.shape}});
    }
    index["tensors"] = entries;
    const std::string header = index.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    uint64_t hlen = header.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, t] : tensors)
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!out) throw Error("failed writing checkpoint: " + path);
}

TensorMap load_tensors(const std::string& path, std::string* metadata_json) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("not a checkpoint file: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw Error("truncated checkpoint header: " + path);

    const json index = json::parse(header);
    if (metadata_json) *metadata_json = index.at("metadata").dump();

    TensorMap tensors;
    for (const auto& entry : index.at("tensors")) {
        NamedTensor t;
        t.shape = entry.at("shape").get<std::vector<int>>();
        int64_t numel = 1;
        for (int d : t.shape) numel *= d;
        t.values.resize(static_cast<size_t>(numel));
        in.read(reinterpret_cast<char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(double)));
        if (!in) throw Error("truncated checkpoint payload: " + path);
        tensors.emplace(entry.at("name").get<std::string>(), std::move(t));
    }
    return tensors;
}

TensorMap to_tensor_map(const ParamStore& store) {
    TensorMap tensors;
    for (const Param& p : store.params())
        tensors.emplace(p.name, NamedTensor{p.var->shape, p.var->v});
    return tensors;
}

void assign_from_tensor_map(ParamStore& store, const TensorMap& tensors) {
    for (Param& p : store.params()) {
        auto it = tensors.find(p.name);
        if (it == tensors.end()) throw Error("checkpoint missing parameter: " + p.name);
        if (it->second.shape != p.var->shape) throw Error("checkpoint shape mismatch for: " + p.name);
        p.var->v = it->second.values;
    }
}

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata_json) {
    save_tensors(path, to_tensor_map(store), metadata_json);
}

void load_checkpoint(const std::string& path, ParamStore& store, std::string* metadata_json) {
    assign_from_tensor_map(store, load_tensors(path, metadata_json));
}

}  // namespace vlseg::nn
