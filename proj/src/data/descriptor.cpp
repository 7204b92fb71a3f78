#include "vlseg/data/descriptor.hpp"

#include "vlseg/prompt/templates.hpp"

namespace vlseg::data {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw Error("unknown split: " + name);
}

const std::vector<DatasetDescriptor>& builtin_descriptors() {
    static const std::vector<DatasetDescriptor> all = {
        {"kvasir-seg", "Kvasir-SEG", "non-radiology", "endoscopy", "colon", {"polyp"}, {800, 100, 100},
         prompt::family::endoscopy, false},
        {"clinicdb", "ClinicDB", "non-radiology", "endoscopy", "colon", {"polyp"}, {490, 61, 61},
         prompt::family::endoscopy, false},
        {"bkai", "BKAI", "non-radiology", "endoscopy", "colon", {"polyp"}, {800, 100, 100},
         prompt::family::endoscopy, false},
        {"etis", "ETIS", "non-radiology", "endoscopy", "colon", {"polyp"}, {0, 0, 196},
         prompt::family::endoscopy, true},
        {"colondb", "CVC-ColonDB", "non-radiology", "endoscopy", "colon", {"polyp"}, {0, 0, 380},
         prompt::family::endoscopy, true},
        {"cvc300", "CVC-300", "non-radiology", "endoscopy", "colon", {"polyp"}, {0, 0, 60},
         prompt::family::endoscopy, true},
        {"isic", "ISIC 2016", "non-radiology", "photography", "skin", {"skin melanoma"}, {810, 90, 379},
         prompt::family::isic, false},
        {"dfu", "DFU 2022", "non-radiology", "photography", "foot", {"foot ulcer"}, {1600, 200, 200},
         prompt::family::dfu, false},
        {"camus", "CAMUS", "radiology", "ultrasound", "heart",
         {"Myocardium", "Left ventricular cavity", "Left atrium cavity"}, {4800, 600, 600},
         prompt::family::camus, false},
        {"busi", "BUSI", "radiology", "ultrasound", "breast", {"benign tumor", "malignant tumor"},
         {624, 78, 78}, prompt::family::busi, false},
        {"chexlocalize", "CheXlocalize", "radiology", "x-ray", "chest",
         {"Atelectasis", "Cardiomegaly", "Consolidation", "Edema", "Enlarged Cardiomediastinum",
          "Lung Lesion", "Lung Opacity", "Pleural Effusion", "Pneumothorax", "Support Devices"},
         {1279, 446, 452}, prompt::family::chexlocalize, false},
    };
    return all;
}

const DatasetDescriptor& find_descriptor(const std::string& name) {
    for (const DatasetDescriptor& d : builtin_descriptors())
        if (d.name == name) return d;
    throw Error("unknown dataset: " + name);
}

const std::vector<std::string>& endoscopy_train_datasets() {
    static const std::vector<std::string> v = {"kvasir-seg", "clinicdb", "bkai"};
    return v;
}

const std::vector<std::string>& endoscopy_all_datasets() {
    static const std::vector<std::string> v = {"kvasir-seg", "clinicdb", "bkai", "cvc300", "colondb",
                                               "etis"};
    return v;
}

const std::vector<std::string>& non_radiology_datasets() {
    static const std::vector<std::string> v = {"kvasir-seg", "clinicdb", "bkai", "isic", "dfu"};
    return v;
}

const std::vector<std::string>& radiology_datasets() {
    static const std::vector<std::string> v = {"camus", "busi", "chexlocalize"};
    return v;
}

}  // namespace vlseg::data
