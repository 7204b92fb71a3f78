#pragma once

#include <array>
#include <string>
#include <vector>

#include "vlseg/common.hpp"

namespace vlseg::data {

enum class Split { train, val, test };

inline constexpr std::array<Split, 3> kSplits = {Split::train, Split::val, Split::test};

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct DatasetDescriptor {
    std::string name;          // registry id ("kvasir-seg")
    std::string display_name;  // "Kvasir-SEG"
    std::string category;      // "radiology" | "non-radiology"
    std::string modality;
    std::string organ;
    std::vector<std::string> class_names;
    std::array<int, 3> split_sizes{0, 0, 0};  // train/val/test
    std::string family;                       // prompt template family
    bool test_only = false;

    int split_size(Split s) const { return split_sizes[static_cast<size_t>(s)]; }
    bool multiclass() const { return class_names.size() > 1; }
};

// The eleven registered datasets with their fixed split sizes.
const std::vector<DatasetDescriptor>& builtin_descriptors();
const DatasetDescriptor& find_descriptor(const std::string& name);

// Names of the endoscopy datasets used for cross-dataset transfer
// (train sets first, then the test-only ones).
const std::vector<std::string>& endoscopy_train_datasets();
const std::vector<std::string>& endoscopy_all_datasets();
const std::vector<std::string>& non_radiology_datasets();
const std::vector<std::string>& radiology_datasets();

}  // namespace vlseg::data
