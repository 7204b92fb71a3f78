#include "vlseg/exp/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "json.hpp"
#include "vlseg/eval/report_io.hpp"

namespace vlseg::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

json train_state_to_json(const train::TrainState& s) {
    json hist = json::array();
    for (const auto& r : s.history)
        hist.push_back({r.epoch, r.lr, r.train_loss, r.val_loss, r.val_dice});
    return json{{"epoch", s.epoch},
                {"lr", s.lr},
                {"best_val_dice", s.best_val_dice},
                {"best_epoch", s.best_epoch},
                {"plateau", {s.plateau.lr, s.plateau.best, s.plateau.counter}},
                {"early", {s.early.best, s.early.counter}},
                {"history", hist}};
}

train::TrainState train_state_from_json(const json& j) {
    train::TrainState s;
    s.epoch = j.at("epoch").get<int>();
    s.lr = j.at("lr").get<double>();
    s.best_val_dice = j.at("best_val_dice").get<double>();
    s.best_epoch = j.at("best_epoch").get<int>();
    s.plateau = {j.at("plateau")[0].get<double>(), j.at("plateau")[1].get<double>(),
                 j.at("plateau")[2].get<int>()};
    s.early = {j.at("early")[0].get<double>(), j.at("early")[1].get<int>()};
    for (const auto& r : j.at("history"))
        s.history.push_back({r[0].get<int>(), r[1].get<double>(), r[2].get<double>(),
                             r[3].get<double>(), r[4].get<double>()});
    return s;
}

void save_optimizer_state(const std::string& path, const nn::Optimizer::State& state) {
    nn::TensorMap tensors;
    for (size_t i = 0; i < state.m.size(); ++i) {
        tensors.emplace("m." + std::to_string(i),
                        nn::NamedTensor{{static_cast<int>(state.m[i].size())}, state.m[i]});
        tensors.emplace("v." + std::to_string(i),
                        nn::NamedTensor{{static_cast<int>(state.v[i].size())}, state.v[i]});
    }
    nn::save_tensors(path, tensors, json{{"t", state.t}}.dump());
}

nn::Optimizer::State load_optimizer_state(const std::string& path) {
    std::string meta;
    const nn::TensorMap tensors = nn::load_tensors(path, &meta);
    nn::Optimizer::State state;
    state.t = json::parse(meta).at("t").get<int64_t>();
    const size_t n = tensors.size() / 2;
    for (size_t i = 0; i < n; ++i) {
        state.m.push_back(tensors.at("m." + std::to_string(i)).values);
        state.v.push_back(tensors.at("v." + std::to_string(i)).values);
    }
    return state;
}

struct ResolvedData {
    std::vector<std::shared_ptr<data::DatasetHandle>> train_handles;  // also used for val/test
    std::string family;
};

ResolvedData resolve_train_data(const RunSpec& spec, const RunnerOptions& options) {
    ResolvedData out;
    auto handle_for = [&](const std::string& name) {
        return data::register_dataset(data::find_descriptor(name),
                                      (fs::path(options.data_root) / name).string());
    };
    if (spec.train_data == "pooled" || spec.train_data == "endoscopy-pooled") {
        const bool endo = spec.train_data == "endoscopy-pooled";
        std::vector<std::shared_ptr<data::DatasetHandle>> members;
        for (const data::DatasetDescriptor& d : data::builtin_descriptors()) {
            if (d.test_only) continue;
            if (endo && d.family != prompt::family::endoscopy) continue;
            if (!fs::is_directory(fs::path(options.data_root) / d.name)) continue;
            members.push_back(handle_for(d.name));
        }
        if (members.empty()) throw Error("no pool members found under " + options.data_root);
        // validates membership rules (test-only exclusion, endoscopy restriction)
        data::pool(members, endo ? data::PoolKind::endoscopy_only : data::PoolKind::all, spec.seed);
        out.train_handles = std::move(members);
        out.family = endo ? prompt::family::endoscopy : "mixed";
    } else {
        out.train_handles.push_back(handle_for(spec.train_data));
        out.family = out.train_handles.front()->descriptor().family;
    }
    return out;
}

}  // namespace

std::unique_ptr<models::SegModel> build_run_model(const RunSpec& spec, const RunnerOptions& options) {
    if (spec.model == "unet") {
        baselines::CNNConfig cfg;
        cfg.input_side = options.toy_side;
        cfg.seed = spec.seed;
        return baselines::build_unet(cfg);
    }
    models::VLSMConfig cfg = models::toy_config(spec.model, options.toy_side);
    cfg.freeze_text = spec.freeze_encoders;
    cfg.freeze_image = spec.freeze_encoders;
    if (!options.pretrained_manifest.empty()) {
        const models::CheckpointWeightsProvider provider(options.pretrained_manifest);
        return models::build_variant(cfg, provider);
    }
    const models::ToyWeightsProvider provider(options.provider_seed);
    return models::build_variant(cfg, provider);
}

RunOutcome run_one(const RunSpec& spec, const RunnerOptions& options) {
    RunOutcome outcome;
    outcome.run_id = spec.run_id();
    const fs::path run_dir = fs::path(options.out_root) / "runs" / outcome.run_id;
    outcome.run_dir = run_dir.string();
    fs::create_directories(run_dir / "checkpoints");
    fs::create_directories(run_dir / "eval");
    fs::create_directories(run_dir / "figs");

    train::TrainConfig tcfg =
        options.train_config ? *options.train_config : train::config_for_model(spec.model);
    tcfg.seed = spec.seed;

    json config_json = {{"run",
                         {{"model", spec.model},
                          {"freeze_encoders", spec.freeze_encoders},
                          {"train_data", spec.train_data},
                          {"ptype", prompt::prompt_type_name(spec.ptype)},
                          {"seed", spec.seed}}},
                        {"train_config", json::parse(train::train_config_to_json(tcfg))},
                        {"provider_seed", options.provider_seed},
                        {"toy_side", options.toy_side}};
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_json.dump())));
    const std::string checksum(hash_hex);
    const std::string version = std::string(kVersion) + "+" + checksum.substr(0, 8);

    const fs::path manifest_path = run_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        const json existing = json::parse(read_file(manifest_path));
        if (existing.value("checksum", "") == checksum && existing.value("status", "") == "complete") {
            outcome.skipped = true;  // already done with this exact config
            return outcome;
        }
    }

    auto write_manifest = [&](const std::string& status) {
        json m = {{"config", config_json},
                  {"checksum", checksum},
                  {"version", version},
                  {"status", status}};
        std::ofstream out(manifest_path);
        out << m.dump(2) << "\n";
    };
    write_manifest("incomplete");

    // ---- stage 1: data + prompts -------------------------------------------------
    const ResolvedData resolved = resolve_train_data(spec, options);
    data::PromptingConfig prompting;
    prompting.seed = spec.seed;
    prompting.emit_absent = options.emit_absent_class;
    if (!options.sidecar_path.empty())
        prompting.sidecar = prompt::load_attribute_sidecar(options.sidecar_path);

    std::map<std::string, std::string> freetext;
    if (!options.freetext_prompts.empty())
        freetext = data::load_freetext_prompts(options.freetext_prompts);

    std::vector<data::SampleTriplet> train_triplets, val_triplets;
    std::vector<prompt::AttributeSet> train_attrs;
    std::vector<std::string> train_families;
    std::vector<data::PromptRecord> prompt_records;
    for (const auto& handle : resolved.train_handles) {
        const std::string fam = handle->descriptor().family;
        const prompt::PromptType pt =
            prompt::prompt_type_available(fam, spec.ptype) ? spec.ptype : prompt::max_prompt_type(fam);
        auto recs = data::generate_prompt_records(*handle, data::Split::train, pt, prompting);
        prompt_records.insert(prompt_records.end(), recs.begin(), recs.end());

        std::vector<prompt::AttributeSet> attrs;
        auto tr = data::load_prompted_triplets(*handle, data::Split::train, pt, prompting, &attrs);
        data::apply_freetext_prompts(tr, freetext);  // literal pass-through
        for (size_t i = 0; i < tr.size(); ++i) {
            train_triplets.push_back(std::move(tr[i]));
            train_attrs.push_back(std::move(attrs[i]));
            train_families.push_back(fam);
        }
        auto va = data::load_prompted_triplets(*handle, data::Split::val, pt, prompting);
        data::apply_freetext_prompts(va, freetext);
        for (auto& t : va) val_triplets.push_back(std::move(t));
    }
    data::write_prompt_jsonl((run_dir / "prompts.jsonl").string(), prompt_records);

    // pooled training order is a seeded global shuffle
    if (resolved.train_handles.size() > 1) {
        Rng rng(derive_seed(spec.seed, "pool_shuffle"));
        for (size_t i = train_triplets.size(); i > 1; --i) {
            const size_t j = rng() % i;
            std::swap(train_triplets[i - 1], train_triplets[j]);
            std::swap(train_attrs[i - 1], train_attrs[j]);
            std::swap(train_families[i - 1], train_families[j]);
        }
    }

    // ---- stage 2: train ----------------------------------------------------------
    auto model = build_run_model(spec, options);

    train::FitOptions fit_options;
    fit_options.verbose = options.verbose;
    // class-description draws are re-randomized every training step
    std::map<std::string, size_t> attr_index;
    for (size_t i = 0; i < train_triplets.size(); ++i)
        attr_index[train_triplets[i].sample_id + "/" + train_triplets[i].class_name] = i;
    if (spec.ptype >= prompt::PromptType::P7 && resolved.family != "mixed" &&
        prompt::is_photographic_family(resolved.family) && freetext.empty()) {
        fit_options.prompt_fn = [&, seed = spec.seed](const data::SampleTriplet& s, int epoch,
                                                      size_t index) {
            const size_t i = attr_index.at(s.sample_id + "/" + s.class_name);
            const uint64_t step = static_cast<uint64_t>(epoch) * 1000003ull + index;
            return data::prompt_for(train_attrs[i], train_families[i], spec.ptype,
                                    s.sample_id + "/" + s.class_name, seed, step);
        };
    }

    const fs::path last_ckpt = run_dir / "checkpoints" / "last.ckpt";
    const fs::path optim_ckpt = run_dir / "checkpoints" / "optimizer.ckpt";
    const fs::path state_path = run_dir / "checkpoints" / "state.json";
    if (fs::exists(last_ckpt) && fs::exists(state_path) && fs::exists(optim_ckpt)) {
        nn::load_checkpoint(last_ckpt.string(), model->store());
        fit_options.resume_state = train_state_from_json(json::parse(read_file(state_path)));
        fit_options.resume_optimizer = load_optimizer_state(optim_ckpt.string());
        outcome.resumed = true;
    }
    fit_options.on_epoch = [&](const train::TrainState& st, const nn::Optimizer& opt,
                               models::SegModel& m) {
        nn::save_checkpoint(last_ckpt.string(), m.store(), json{{"epoch", st.epoch}}.dump());
        save_optimizer_state(optim_ckpt.string(), opt.state());
        std::ofstream out(state_path);
        out << train_state_to_json(st).dump() << "\n";
    };

    const int start_epoch = fit_options.resume_state ? fit_options.resume_state->epoch : 0;
    const train::FitResult result = fit(*model, train_triplets, val_triplets, tcfg, fit_options);
    outcome.epochs_run = result.state.epoch - start_epoch;
    outcome.best_val_dice = result.best_val_dice;

    nn::save_checkpoint((run_dir / "checkpoints" / "best.ckpt").string(), model->store(),
                        json{{"best_epoch", result.best_epoch}, {"run", outcome.run_id}}.dump());
    train::write_history_csv((run_dir / "history.csv").string(), result.state.history);

    // ---- stage 3: evaluate on the test split(s) ----------------------------------
    std::vector<evaluation::EvalReport> reports;
    for (const auto& handle : resolved.train_handles) {
        if (handle->ids(data::Split::test).empty()) continue;
        const std::string fam = handle->descriptor().family;
        const prompt::PromptType pt =
            prompt::prompt_type_available(fam, spec.ptype) ? spec.ptype : prompt::max_prompt_type(fam);
        evaluation::GroupKey key;
        key.model = spec.model;
        key.train_data = spec.train_data;
        key.test_data = handle->descriptor().name;
        key.ptype = prompt::prompt_type_name(pt);
        auto test_triplets = data::load_prompted_triplets(*handle, data::Split::test, pt, prompting);
        data::apply_freetext_prompts(test_triplets, freetext);
        reports.push_back(evaluation::evaluate_triplets(*model, test_triplets, key));
    }
    evaluation::write_reports_csv((run_dir / "eval" / "test.csv").string(), reports);
    evaluation::write_reports_json((run_dir / "eval" / "test.json").string(), reports);

    if (!reports.empty()) {
        std::vector<std::string> groups;
        evaluation::BarSeries series;
        series.label = spec.model;
        for (const auto& r : reports) {
            groups.push_back(r.key.test_data);
            series.values.push_back(r.mean_x100());
            series.errors.push_back(r.std_x100());
        }
        evaluation::write_grouped_bar_svg((run_dir / "figs" / "test_dice.svg").string(),
                                          outcome.run_id, groups, {series});
    }

    write_manifest("complete");
    return outcome;
}

std::vector<RunOutcome> run_plan(const ExperimentPlan& plan, const RunnerOptions& options) {
    plan.validate();
    std::vector<RunOutcome> outcomes;
    for (const RunSpec& spec : plan.runs) {
        if (options.verbose) std::cerr << "[vlseg] run " << spec.run_id() << "\n";
        outcomes.push_back(run_one(spec, options));
    }
    return outcomes;
}

namespace {

struct Row {
    std::string model, train_data, test_data, ptype;
    double mean = 0, stdev = 0;
    long n = 0;
};

std::vector<Row> collect_rows(const std::string& out_root) {
    std::vector<Row> rows;
    const fs::path runs = fs::path(out_root) / "runs";
    if (!fs::is_directory(runs)) return rows;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(runs))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const fs::path& dir : dirs) {
        const fs::path csv = dir / "eval" / "test.csv";
        if (!fs::exists(csv)) continue;
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            Row row;
            std::stringstream ss(line);
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(ss, field, ',')) fields.push_back(field);
            if (fields.size() < 8) continue;
            row.model = fields[0];
            row.train_data = fields[1];
            row.test_data = fields[2];
            row.ptype = fields[3];
            row.n = std::stol(fields[5]);
            row.mean = std::stod(fields[6]);
            row.stdev = std::stod(fields[7]);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

void write_report(const std::string& out_root) {
    const std::vector<Row> rows = collect_rows(out_root);
    const fs::path report_dir = fs::path(out_root) / "report";
    fs::create_directories(report_dir / "figs");

    // regime x model table per prompt type (the pooled/individual layout)
    std::set<std::string> ptypes, test_sets, model_names;
    for (const Row& r : rows) {
        ptypes.insert(r.ptype);
        test_sets.insert(r.test_data);
        model_names.insert(r.model);
    }
    for (const std::string& pt : ptypes) {
        std::ostringstream md;
        md << "| Finetuned | Model |";
        for (const auto& t : test_sets) md << " " << t << " |";
        md << "\n|---|---|";
        for (size_t i = 0; i < test_sets.size(); ++i) md << "---|";
        md << "\n";
        const std::vector<std::pair<std::string, std::string>> regimes = {
            {"Individual", "individual"}, {"Pooled", "pooled"}, {"Endoscopy Pooled", "endoscopy-pooled"}};
        for (const auto& [label, regime] : regimes) {
            for (const auto& m : model_names) {
                md << "| " << label << " | " << m << " |";
                for (const auto& t : test_sets) {
                    const Row* found = nullptr;
                    for (const Row& r : rows) {
                        const bool regime_match = regime == "individual"
                                                      ? r.train_data == r.test_data
                                                      : r.train_data == regime;
                        if (r.ptype == pt && r.model == m && r.test_data == t && regime_match) {
                            found = &r;
                            break;
                        }
                    }
                    if (found) {
                        char buf[32];
                        std::snprintf(buf, sizeof(buf), " %.2f |", found->mean);
                        md << buf;
                    } else {
                        md << " - |";
                    }
                }
                md << "\n";
            }
        }
        std::ofstream out(report_dir / ("table_finetuning_" + pt + ".md"));
        out << md.str();
    }

    // per-dataset grouped bars over prompt types (individual regime)
    for (const std::string& t : test_sets) {
        std::vector<std::string> groups;
        for (const auto& pt : ptypes) groups.push_back(pt);
        std::vector<evaluation::BarSeries> series;
        for (const auto& m : model_names) {
            evaluation::BarSeries s;
            s.label = m;
            for (const auto& pt : ptypes) {
                double v = 0, e = 0;
                for (const Row& r : rows)
                    if (r.ptype == pt && r.model == m && r.test_data == t && r.train_data == r.test_data) {
                        v = r.mean;
                        e = r.stdev;
                        break;
                    }
                s.values.push_back(v);
                s.errors.push_back(e);
            }
            series.push_back(std::move(s));
        }
        evaluation::write_grouped_bar_svg((report_dir / "figs" / (t + "_dice.svg")).string(),
                                          t + " test dice by prompt type", groups, series);
    }

    // flat CSV of everything collected
    std::ofstream flat(report_dir / "all_results.csv");
    flat << "model,train_data,test_data,ptype,n,dice_mean,dice_std\n";
    for (const Row& r : rows)
        flat << r.model << "," << r.train_data << "," << r.test_data << "," << r.ptype << "," << r.n
             << "," << r.mean << "," << r.stdev << "\n";
}

std::string cross_matrix_markdown(const evaluation::CrossDatasetMatrix& matrix) {
    std::ostringstream md;
    md << "| Finetuned on |";
    for (const auto& t : matrix.test_names) md << " " << t << " |";
    md << "\n|---|";
    for (size_t i = 0; i < matrix.test_names.size(); ++i) md << "---|";
    md << "\n";
    for (const auto& train : matrix.train_names) {
        md << "| " << train << " |";
        for (const auto& test : matrix.test_names) {
            auto it = matrix.cells.find({train, test});
            if (it == matrix.cells.end()) {
                md << " - |";
                continue;
            }
            char buf[48];
            std::snprintf(buf, sizeof(buf), " %.2f%s |", it->second.mean_x100(),
                          matrix.in_distribution(train, test) ? " (id)" : "");
            md << buf;
        }
        md << "\n";
    }
    return md.str();
}

void write_cross_matrix(const std::string& out_root, const evaluation::CrossDatasetMatrix& matrix) {
    const fs::path dir = fs::path(out_root) / "cross";
    fs::create_directories(dir);
    std::vector<evaluation::EvalReport> reports;
    for (const auto& [cell, report] : matrix.cells) reports.push_back(report);
    evaluation::write_reports_csv((dir / "matrix.csv").string(), reports);
    std::ofstream md(dir / "matrix.md");
    md << cross_matrix_markdown(matrix);
}

}  // namespace vlseg::experiment
