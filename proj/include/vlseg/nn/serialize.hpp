#pragma once

#include <map>
#include <string>
#include <vector>

#include "vlseg/nn/layers.hpp"

namespace vlseg::nn {

struct NamedTensor {
    std::vector<int> shape;
    std::vector<double> values;
};

using TensorMap = std::map<std::string, NamedTensor>;

// Single-file checkpoint: magic, format version, JSON index, raw float64
// payload. Loading rejects unknown versions and truncated files.
void save_tensors(const std::string& path, const TensorMap& tensors,
                  const std::string& metadata_json = "{}");
TensorMap load_tensors(const std::string& path, std::string* metadata_json = nullptr);

TensorMap to_tensor_map(const ParamStore& store);
// Assigns by name; every store parameter must be present with matching shape.
void assign_from_tensor_map(ParamStore& store, const TensorMap& tensors);

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& metadata_json = "{}");
void load_checkpoint(const std::string& path, ParamStore& store, std::string* metadata_json = nullptr);

}  // namespace vlseg::nn
