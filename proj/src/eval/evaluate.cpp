#include "vlseg/eval/evaluate.hpp"

#include <cmath>

#include "vlseg/data/preprocess.hpp"

namespace vlseg::evaluation {

double EvalReport::mean_x100() const {
    if (per_sample.empty()) return 0.0;
    double s = 0;
    for (double d : per_sample) s += d;
    return 100.0 * s / static_cast<double>(per_sample.size());
}

double EvalReport::std_x100() const {
    if (per_sample.empty()) return 0.0;
    const double m = mean_x100() / 100.0;
    double acc = 0;
    for (double d : per_sample) acc += (d - m) * (d - m);
    return 100.0 * std::sqrt(acc / static_cast<double>(per_sample.size()));
}

FloatMap predict_logits(models::SegModel& model, const data::SampleTriplet& sample) {
    const Image input = data::preprocess(sample.image, model.input_spec());
    const nn::Var logits = model.forward_logits(input, sample.prompt);
    if (logits->shape.size() != 3 || logits->shape[0] != 1) throw Error("expected a {1,H,W} logit map");
    FloatMap raw(logits->shape[1], logits->shape[2]);
    for (size_t i = 0; i < raw.v.size(); ++i) raw.v[i] = static_cast<float>(logits->v[i]);
    return data::restore(raw, sample.image.h, sample.image.w);
}

Mask predict_mask(models::SegModel& model, const data::SampleTriplet& sample) {
    return data::threshold_logits(predict_logits(model, sample));
}

EvalReport evaluate_triplets(models::SegModel& model, const std::vector<data::SampleTriplet>& triplets,
                             GroupKey key, const PromptRewriter& rewrite) {
    if (triplets.empty()) throw Error("empty split");
    EvalReport report;
    report.key = std::move(key);
    report.per_sample.reserve(triplets.size());
    for (const data::SampleTriplet& t : triplets) {
        if (rewrite) {
            data::SampleTriplet rewritten = t;
            rewritten.prompt = rewrite(t);
            report.per_sample.push_back(dice_score(predict_mask(model, rewritten), t.mask));
        } else {
            report.per_sample.push_back(dice_score(predict_mask(model, t), t.mask));
        }
    }
    return report;
}

EvalReport evaluate(models::SegModel& model, const data::DatasetHandle& handle, data::Split split,
                    prompt::PromptType ptype, const data::PromptingConfig& prompting, GroupKey key,
                    const PromptRewriter& rewrite) {
    const auto triplets = data::load_prompted_triplets(handle, split, ptype, prompting);
    if (key.model.empty()) key.model = model.kind();
    if (key.test_data.empty()) key.test_data = handle.descriptor().name;
    if (key.ptype.empty()) key.ptype = prompt::prompt_type_name(ptype);
    return evaluate_triplets(model, triplets, std::move(key), rewrite);
}

const EvalReport& CrossDatasetMatrix::at(const std::string& train, const std::string& test) const {
    auto it = cells.find({train, test});
    if (it == cells.end()) throw Error("missing cell (" + train + ", " + test + ")");
    return it->second;
}

CrossDatasetMatrix cross_dataset_eval(
    const std::map<std::string, models::SegModel*>& models_by_train_dataset,
    const std::vector<std::shared_ptr<data::DatasetHandle>>& test_handles, data::Split split,
    prompt::PromptType ptype, const data::PromptingConfig& prompting) {
    CrossDatasetMatrix matrix;
    for (const auto& [train_name, model] : models_by_train_dataset)
        matrix.train_names.push_back(train_name);
    for (const auto& handle : test_handles) {
        if (handle->descriptor().family != test_handles.front()->descriptor().family)
            throw Error("cross_dataset_eval requires test datasets of one prompt family");
        matrix.test_names.push_back(handle->descriptor().name);
    }

    for (const auto& [train_name, model] : models_by_train_dataset) {
        for (const auto& handle : test_handles) {
            const std::string& test_name = handle->descriptor().name;
            if (!model)
                throw Error("missing checkpoint for cell (" + train_name + ", " + test_name + ")");
            GroupKey key;
            key.model = model->kind();
            key.train_data = train_name;
            key.test_data = test_name;
            key.ptype = prompt::prompt_type_name(ptype);
            matrix.cells.emplace(std::make_pair(train_name, test_name),
                                 evaluate(*model, *handle, split, ptype, prompting, key));
        }
    }
    return matrix;
}

}  // namespace vlseg::evaluation
