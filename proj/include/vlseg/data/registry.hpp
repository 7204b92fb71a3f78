#pragma once

#include <map>
#include <memory>

#include "vlseg/data/descriptor.hpp"
#include "vlseg/data/triplet.hpp"

namespace vlseg::data {

// Directory-backed dataset. Layout:
//   <root>/images/<split>/<id>.png
//   <root>/masks/<split>/<id>.png     (label-indexed)
//   <root>/classes.json               (optional: {class name -> label})
class DatasetHandle {
public:
    DatasetHandle(DatasetDescriptor descriptor, std::string root);

    const DatasetDescriptor& descriptor() const { return desc_; }
    const std::string& root() const { return root_; }
    const std::vector<std::string>& ids(Split s) const { return ids_[static_cast<size_t>(s)]; }
    size_t size(Split s) const { return ids(s).size(); }
    // class name -> integer label, ascending label order when iterated
    const std::map<std::string, int>& class_table() const { return class_table_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    Image load_image(Split s, const std::string& id) const;
    LabelMask load_label_mask(Split s, const std::string& id) const;
    // One binary triplet per class (prompt left empty here).
    std::vector<SampleTriplet> load_triplets(Split s, const std::string& id,
                                             bool emit_absent = true) const;

private:
    DatasetDescriptor desc_;
    std::string root_;
    std::map<std::string, int> class_table_;
    std::array<std::vector<std::string>, 3> ids_;
    std::vector<std::string> warnings_;
};

// Validates layout and split counts. Mismatching counts produce warnings on
// the handle; structural problems (missing masks, train data in a test-only
// dataset, no samples at all) throw.
std::shared_ptr<DatasetHandle> register_dataset(const DatasetDescriptor& descriptor,
                                                const std::string& root);

// Expands a label mask into per-class binary triplets. With `emit_absent`,
// every class of the table yields a triplet (all-zero mask when absent).
std::vector<SampleTriplet> expand_multiclass(const Image& image, const LabelMask& labels,
                                             const std::map<std::string, int>& class_table,
                                             bool emit_absent = true);

enum class PoolKind { all, endoscopy_only };

std::string pool_kind_name(PoolKind kind);

// Concatenation of member datasets with per-sample provenance.
class PooledDataset {
public:
    PooledDataset(std::vector<std::shared_ptr<DatasetHandle>> members, PoolKind kind, uint64_t seed);

    struct Entry {
        int member;
        std::string id;
    };

    PoolKind kind() const { return kind_; }
    const std::vector<std::shared_ptr<DatasetHandle>>& members() const { return members_; }
    const std::vector<Entry>& entries(Split s) const { return entries_[static_cast<size_t>(s)]; }
    size_t size(Split s) const { return entries(s).size(); }

private:
    std::vector<std::shared_ptr<DatasetHandle>> members_;
    PoolKind kind_;
    std::array<std::vector<Entry>, 3> entries_;
};

PooledDataset pool(std::vector<std::shared_ptr<DatasetHandle>> members, PoolKind kind, uint64_t seed);

}  // namespace vlseg::data
