#include "vlseg/robustness/suite.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "vlseg/eval/report_io.hpp"
#include "vlseg/png_io.hpp"

namespace vlseg::robustness {

namespace fs = std::filesystem;
using evaluation::EvalReport;
using prompt::AttributeKey;

namespace {

std::string compose_tag(const data::SampleTriplet& t) { return t.sample_id + "/" + t.class_name; }

// Same stream the prompt pipeline uses, so identity matches the base
// prompts byte for byte.
Rng compose_rng_for(uint64_t seed, const data::SampleTriplet& t) {
    return Rng(derive_seed(seed, "prompt_" + compose_tag(t)));
}

Image render_panel(const data::SampleTriplet& t, const Mask& base_pred, const Mask& pert_pred) {
    const int h = t.image.h, w = t.image.w, gap = 2;
    Image panel(h, 4 * w + 3 * gap, 3, 1.0f);
    auto blit_image = [&](int x0, const Image& img) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) panel.at(y, x0 + x, c) = img.at(y, x, c);
    };
    auto blit_mask = [&](int x0, const Mask& m) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) panel.at(y, x0 + x, c) = m.at(y, x) ? 1.f : 0.f;
    };
    blit_image(0, t.image);
    blit_mask(w + gap, t.mask);
    blit_mask(2 * (w + gap), base_pred);
    blit_mask(3 * (w + gap), pert_pred);
    return panel;
}

}  // namespace

SuiteResult run_perturbation_suite(models::SegModel& model,
                                   const std::vector<data::SampleTriplet>& triplets,
                                   const std::vector<prompt::AttributeSet>& attrs,
                                   const std::string& family, prompt::PromptType ptype,
                                   const std::vector<PerturbationSpec>& specs,
                                   const SuiteOptions& options) {
    if (triplets.size() != attrs.size()) throw Error("suite: attrs must parallel triplets");
    if (triplets.empty()) throw Error("empty split");

    std::map<std::string, size_t> index_by_tag;
    for (size_t i = 0; i < triplets.size(); ++i) index_by_tag[compose_tag(triplets[i])] = i;

    auto base_rewriter = [&](const data::SampleTriplet& t) {
        const size_t i = index_by_tag.at(compose_tag(t));
        Rng rng = compose_rng_for(options.compose_seed, t);
        PerturbationSpec identity;
        return perturb_prompt(attrs[i], family, ptype, identity, rng);
    };

    SuiteResult suite;
    evaluation::GroupKey base_key;
    base_key.model = model.kind();
    base_key.test_data = triplets.front().dataset;
    base_key.ptype = prompt::prompt_type_name(ptype);
    suite.base = evaluation::evaluate_triplets(model, triplets, base_key, base_rewriter);

    for (const PerturbationSpec& spec : specs) {
        auto rewriter = [&](const data::SampleTriplet& t) {
            const size_t i = index_by_tag.at(compose_tag(t));
            Rng rng = compose_rng_for(options.compose_seed, t);
            PerturbationSpec per_sample = spec;
            per_sample.seed = derive_seed(spec.seed, compose_tag(t));
            return perturb_prompt(attrs[i], family, ptype, per_sample, rng);
        };
        PerturbationResult result;
        result.spec = spec;
        result.base = suite.base;
        evaluation::GroupKey key = base_key;
        key.perturbation = spec.label();
        result.perturbed = evaluation::evaluate_triplets(model, triplets, key, rewriter);

        const double base_mean = suite.base.mean_x100();
        const double pert_mean = result.perturbed.mean_x100();
        if (base_mean == 0.0) {
            result.absolute = true;
            result.change = pert_mean - base_mean;
        } else {
            result.change = (pert_mean - base_mean) / base_mean * 100.0;
        }
        suite.results.push_back(std::move(result));
    }

    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir);

        std::vector<EvalReport> reports = {suite.base};
        for (const auto& r : suite.results) reports.push_back(r.perturbed);
        evaluation::write_reports_csv((fs::path(options.out_dir) / "perturbation_eval.csv").string(),
                                      reports);
        {
            std::ofstream out(fs::path(options.out_dir) / "relative_change.csv");
            out << "perturbation,base_mean,perturbed_mean,change,absolute_flag\n";
            for (const auto& r : suite.results)
                out << r.spec.label() << "," << r.base.mean_x100() << "," << r.perturbed.mean_x100()
                    << "," << r.change << "," << (r.absolute ? 1 : 0) << "\n";
        }

        // grouped chart: one group per targeted attribute, one bar per mode
        std::vector<std::string> attrs_order;
        std::vector<PerturbMode> modes_order;
        for (const auto& r : suite.results) {
            if (r.spec.mode == PerturbMode::identity || r.spec.mode == PerturbMode::class_name_only)
                continue;
            const std::string a = prompt::attribute_name(r.spec.target);
            if (std::find(attrs_order.begin(), attrs_order.end(), a) == attrs_order.end())
                attrs_order.push_back(a);
            if (std::find(modes_order.begin(), modes_order.end(), r.spec.mode) == modes_order.end())
                modes_order.push_back(r.spec.mode);
        }
        if (!attrs_order.empty()) {
            std::vector<evaluation::BarSeries> series;
            for (PerturbMode mode : modes_order) {
                evaluation::BarSeries s;
                s.label = perturb_mode_name(mode);
                s.values.assign(attrs_order.size(), 0.0);
                for (const auto& r : suite.results) {
                    if (r.spec.mode != mode) continue;
                    const auto it = std::find(attrs_order.begin(), attrs_order.end(),
                                              prompt::attribute_name(r.spec.target));
                    if (it != attrs_order.end())
                        s.values[static_cast<size_t>(it - attrs_order.begin())] = 50.0 + r.change / 2.0;
                }
                series.push_back(std::move(s));
            }
            // bars are centered at 50 so negative changes stay visible
            evaluation::write_grouped_bar_svg(
                (fs::path(options.out_dir) / "relative_change.svg").string(),
                "relative dice change (% , centered at 0)", attrs_order, series, 100.0);
        }

        // worst-drop gallery for each non-identity spec
        for (const auto& r : suite.results) {
            if (r.spec.mode == PerturbMode::identity) continue;
            std::vector<size_t> order(triplets.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                const double da = r.base.per_sample[a] - r.perturbed.per_sample[a];
                const double db = r.base.per_sample[b] - r.perturbed.per_sample[b];
                return da != db ? da > db : a < b;
            });
            const int n = std::min<int>(options.gallery_count, static_cast<int>(order.size()));
            for (int rank = 0; rank < n; ++rank) {
                const data::SampleTriplet& t = triplets[order[static_cast<size_t>(rank)]];
                data::SampleTriplet base_t = t, pert_t = t;
                base_t.prompt = base_rewriter(t);
                Rng rng = compose_rng_for(options.compose_seed, t);
                PerturbationSpec per_sample = r.spec;
                per_sample.seed = derive_seed(r.spec.seed, compose_tag(t));
                pert_t.prompt = perturb_prompt(attrs[index_by_tag.at(compose_tag(t))], family, ptype,
                                               per_sample, rng);
                const Image panel = render_panel(t, evaluation::predict_mask(model, base_t),
                                                 evaluation::predict_mask(model, pert_t));
                const std::string name = "gallery_" + r.spec.label() + "_" + std::to_string(rank) + "_" +
                                         t.sample_id + ".png";
                std::string safe = name;
                std::replace(safe.begin(), safe.end(), ':', '-');
                std::replace(safe.begin(), safe.end(), '/', '-');
                write_image_png((fs::path(options.out_dir) / safe).string(), panel);
            }
        }
    }
    return suite;
}

std::vector<PerturbationSpec> default_specs(const std::string& family, prompt::PromptType ptype,
                                            const std::vector<prompt::AttributeSet>& attrs,
                                            uint64_t seed) {
    std::vector<PerturbationSpec> specs;
    specs.push_back(PerturbationSpec{PerturbMode::identity, AttributeKey::size, seed, {}});

    const auto required = prompt::required_attributes(family, ptype);
    for (AttributeKey key : required) {
        if (key == AttributeKey::class_keyword || key == AttributeKey::general_class_info) continue;

        std::set<std::string> observed;
        for (const auto& a : attrs)
            if (const auto* v = a.find(key)) observed.insert(v->joined());
        if (observed.empty()) continue;

        specs.push_back(PerturbationSpec{PerturbMode::random_word, key, seed, {}});

        bool all_mapped = true;
        for (const auto& a : attrs)
            if (const auto* v = a.find(key))
                for (const std::string& part : v->parts) all_mapped &= OppositeMap::builtin().has(part);
        if (all_mapped) specs.push_back(PerturbationSpec{PerturbMode::opposite, key, seed, {}});

        if (observed.size() >= 2)
            specs.push_back(PerturbationSpec{PerturbMode::swap_within_dataset, key, seed,
                                             {observed.begin(), observed.end()}});
    }
    specs.push_back(PerturbationSpec{PerturbMode::class_name_only, AttributeKey::class_keyword, seed, {}});
    return specs;
}

std::vector<PerturbationSpec> load_suite_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open suite config: " + path);
    const nlohmann::json j = nlohmann::json::parse(in);
    if (!j.is_array()) throw Error("suite config must be a JSON array of specs");
    std::vector<PerturbationSpec> specs;
    for (const auto& item : j) {
        PerturbationSpec spec;
        spec.mode = perturb_mode_from_name(item.at("mode").get<std::string>());
        if (item.contains("target")) {
            const auto key = prompt::attribute_from_name(item.at("target").get<std::string>());
            if (!key) throw Error("unknown attribute in suite config: " +
                                  item.at("target").get<std::string>());
            spec.target = *key;
        }
        spec.seed = item.value("seed", 0);
        if (item.contains("value_pool"))
            spec.value_pool = item.at("value_pool").get<std::vector<std::string>>();
        specs.push_back(std::move(spec));
    }
    return specs;
}

}  // namespace vlseg::robustness
