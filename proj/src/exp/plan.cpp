#include "vlseg/exp/plan.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "vlseg/data/descriptor.hpp"

namespace vlseg::experiment {

using nlohmann::json;

std::string RunSpec::run_id() const {
    std::string id = model;
    if (freeze_encoders) id += "_frozen";
    id += "_" + train_data + "_" + prompt::prompt_type_name(ptype) + "_s" + std::to_string(seed);
    return id;
}

void ExperimentPlan::validate() const {
    std::set<std::string> ids;
    for (const RunSpec& run : runs) {
        if (!ids.insert(run.run_id()).second) throw Error("duplicate run id: " + run.run_id());
        if (run.train_data != "pooled" && run.train_data != "endoscopy-pooled") {
            const data::DatasetDescriptor& d = data::find_descriptor(run.train_data);
            if (d.test_only)
                throw Error("test-only dataset cannot be train data: " + run.train_data);
            if (!prompt::prompt_type_available(d.family, run.ptype))
                throw Error("prompt type " + prompt::prompt_type_name(run.ptype) +
                            " unavailable for " + run.train_data);
        }
    }
}

ExperimentPlan non_radiology_plan(const std::string& model, uint64_t seed) {
    ExperimentPlan plan;
    for (const std::string& dataset : data::non_radiology_datasets())
        for (prompt::PromptType p :
             prompt::available_prompt_types(data::find_descriptor(dataset).family))
            plan.runs.push_back(RunSpec{model, false, dataset, p, seed});
    plan.validate();
    return plan;
}

ExperimentPlan radiology_plan(const std::string& model, uint64_t seed) {
    ExperimentPlan plan;
    for (const std::string& dataset : data::radiology_datasets())
        for (prompt::PromptType p :
             prompt::available_prompt_types(data::find_descriptor(dataset).family))
            plan.runs.push_back(RunSpec{model, false, dataset, p, seed});
    plan.validate();
    return plan;
}

ExperimentPlan pooled_plan(const std::string& model, prompt::PromptType ptype, uint64_t seed) {
    ExperimentPlan plan;
    plan.runs.push_back(RunSpec{model, false, "pooled", ptype, seed});
    plan.runs.push_back(RunSpec{model, false, "endoscopy-pooled", ptype, seed});
    plan.validate();
    return plan;
}

std::string plan_to_json(const ExperimentPlan& plan) {
    json runs = json::array();
    for (const RunSpec& r : plan.runs)
        runs.push_back({{"model", r.model},
                        {"freeze_encoders", r.freeze_encoders},
                        {"train_data", r.train_data},
                        {"ptype", prompt::prompt_type_name(r.ptype)},
                        {"seed", r.seed}});
    return json{{"runs", runs}}.dump(2);
}

ExperimentPlan plan_from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentPlan plan;
    for (const auto& r : j.at("runs")) {
        RunSpec spec;
        spec.model = r.at("model").get<std::string>();
        spec.freeze_encoders = r.value("freeze_encoders", false);
        spec.train_data = r.at("train_data").get<std::string>();
        spec.ptype = prompt::prompt_type_from_name(r.at("ptype").get<std::string>());
        spec.seed = r.value("seed", 0);
        plan.runs.push_back(std::move(spec));
    }
    plan.validate();
    return plan;
}

ExperimentPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open plan: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return plan_from_json(text);
}

void save_plan(const std::string& path, const ExperimentPlan& plan) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write plan: " + path);
    out << plan_to_json(plan) << "\n";
}

}  // namespace vlseg::experiment
