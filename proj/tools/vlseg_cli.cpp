// Command-line front end: prompt generation, finetuning, evaluation,
// perturbation robustness, cross-dataset transfer, and report assembly.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "vlseg/data/prompting.hpp"
#include "vlseg/data/synthetic.hpp"
#include "vlseg/eval/report_io.hpp"
#include "vlseg/exp/runner.hpp"
#include "vlseg/nn/serialize.hpp"
#include "vlseg/robustness/suite.hpp"

namespace fs = std::filesystem;
using namespace vlseg;

namespace {

std::unique_ptr<models::SegModel> load_model(const std::string& kind, int side, uint64_t provider_seed,
                                             const std::string& checkpoint,
                                             const std::string& manifest) {
    experiment::RunSpec spec;
    spec.model = kind;
    spec.seed = provider_seed;
    experiment::RunnerOptions options;
    options.toy_side = side;
    options.provider_seed = provider_seed;
    options.pretrained_manifest = manifest;
    auto model = experiment::build_run_model(spec, options);
    if (!checkpoint.empty()) nn::load_checkpoint(checkpoint, model->store());
    return model;
}

data::PromptingConfig make_prompting(const std::string& sidecar, uint64_t seed) {
    data::PromptingConfig cfg;
    cfg.seed = seed;
    if (!sidecar.empty()) cfg.sidecar = prompt::load_attribute_sidecar(sidecar);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vision-language segmentation experiment toolkit"};
    app.require_subcommand(1);

    std::string data_root;
    app.add_option("--data-root", data_root, "dataset layout root")
        ->envname("VLSEG_DATA_ROOT");

    // ---- generate-prompts ----------------------------------------------------
    auto* gen = app.add_subcommand("generate-prompts", "derive attributes and compose prompt strings");
    std::string gen_dataset, gen_masks, gen_sidecar, gen_out, gen_ptype = "P6";
    uint64_t gen_seed = 0;
    gen->add_option("--dataset", gen_dataset, "dataset name")->required();
    gen->add_option("--masks", gen_masks, "masks directory (or dataset root)")->required();
    gen->add_option("--sidecar", gen_sidecar, "attribute sidecar JSON");
    gen->add_option("--out", gen_out, "output JSONL path")->required();
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--ptype", gen_ptype, "prompt type P0..P9");

    // ---- train -----------------------------------------------------------------
    auto* tr = app.add_subcommand("train", "finetune one model on one dataset or pool");
    std::string tr_model = "clipseg", tr_data = "kvasir-seg", tr_ptype = "P1", tr_out = "results";
    std::string tr_config, tr_sidecar, tr_manifest, tr_freetext;
    uint64_t tr_seed = 0, tr_provider_seed = 1234;
    int tr_side = 32, tr_epochs = 0;
    bool tr_freeze = false;
    tr->add_option("--model", tr_model, "clipseg|cris|biomedclipseg|biomedclipseg_d|unet");
    tr->add_option("--dataset", tr_data, "dataset name, 'pooled' or 'endoscopy-pooled'");
    tr->add_option("--ptype", tr_ptype, "prompt type");
    tr->add_option("--out", tr_out, "results tree root");
    tr->add_option("--config", tr_config, "train config JSON file");
    tr->add_option("--sidecar", tr_sidecar, "attribute sidecar JSON");
    tr->add_option("--pretrained-manifest", tr_manifest, "component checkpoint manifest");
    tr->add_option("--freetext", tr_freetext, "literal per-sample prompts JSON");
    tr->add_option("--seed", tr_seed, "run seed");
    tr->add_option("--provider-seed", tr_provider_seed, "toy weight provider seed");
    tr->add_option("--side", tr_side, "toy input side");
    tr->add_option("--epochs", tr_epochs, "override max epochs");
    tr->add_flag("--freeze-encoders", tr_freeze, "finetune the decoder only");

    // ---- evaluate ----------------------------------------------------------------
    auto* ev = app.add_subcommand("evaluate", "dice evaluation of a checkpoint on a split");
    std::string ev_model = "clipseg", ev_data = "kvasir-seg", ev_split = "test", ev_ptype = "P1";
    std::string ev_ckpt, ev_manifest, ev_sidecar, ev_out;
    uint64_t ev_seed = 0, ev_provider_seed = 1234;
    int ev_side = 32;
    ev->add_option("--model", ev_model, "model kind");
    ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint (.ckpt); zero-shot when absent");
    ev->add_option("--pretrained-manifest", ev_manifest, "component checkpoint manifest");
    ev->add_option("--dataset", ev_data, "dataset name")->required();
    ev->add_option("--split", ev_split, "train|val|test");
    ev->add_option("--ptype", ev_ptype, "prompt type");
    ev->add_option("--sidecar", ev_sidecar, "attribute sidecar JSON");
    ev->add_option("--out", ev_out, "CSV output path");
    ev->add_option("--seed", ev_seed, "prompt seed");
    ev->add_option("--provider-seed", ev_provider_seed, "toy weight provider seed");
    ev->add_option("--side", ev_side, "toy input side");

    // ---- perturb-eval --------------------------------------------------------------
    auto* pe = app.add_subcommand("perturb-eval", "attribute-perturbation robustness suite");
    std::string pe_model = "cris", pe_data = "kvasir-seg", pe_split = "test", pe_ptype = "P6";
    std::string pe_ckpt, pe_manifest, pe_sidecar, pe_out = "perturb_out", pe_specs;
    uint64_t pe_seed = 0, pe_provider_seed = 1234;
    int pe_side = 32;
    pe->add_option("--model", pe_model, "model kind");
    pe->add_option("--checkpoint", pe_ckpt, "trained checkpoint");
    pe->add_option("--pretrained-manifest", pe_manifest, "component checkpoint manifest");
    pe->add_option("--dataset", pe_data, "dataset name")->required();
    pe->add_option("--split", pe_split, "split to evaluate");
    pe->add_option("--ptype", pe_ptype, "prompt type the model was finetuned with");
    pe->add_option("--sidecar", pe_sidecar, "attribute sidecar JSON");
    pe->add_option("--specs", pe_specs, "suite config JSON (default: all applicable attributes)");
    pe->add_option("--out", pe_out, "output directory");
    pe->add_option("--seed", pe_seed, "prompt/perturbation seed");
    pe->add_option("--provider-seed", pe_provider_seed, "toy weight provider seed");
    pe->add_option("--side", pe_side, "toy input side");

    // ---- cross-eval ---------------------------------------------------------------
    auto* ce = app.add_subcommand("cross-eval", "train-on-one, test-on-all transfer matrix");
    std::string ce_model = "clipseg", ce_ptype = "P1", ce_out = "results", ce_sidecar;
    std::vector<std::string> ce_ckpts;  // name=path pairs
    std::vector<std::string> ce_tests;
    uint64_t ce_seed = 0, ce_provider_seed = 1234;
    int ce_side = 32;
    ce->add_option("--model", ce_model, "model kind");
    ce->add_option("--checkpoint", ce_ckpts, "train_dataset=checkpoint.ckpt (repeat)")->required();
    ce->add_option("--test-datasets", ce_tests, "datasets to evaluate on");
    ce->add_option("--ptype", ce_ptype, "prompt type");
    ce->add_option("--sidecar", ce_sidecar, "attribute sidecar JSON");
    ce->add_option("--out", ce_out, "results tree root");
    ce->add_option("--seed", ce_seed, "prompt seed");
    ce->add_option("--provider-seed", ce_provider_seed, "toy weight provider seed");
    ce->add_option("--side", ce_side, "toy input side");

    // ---- report ---------------------------------------------------------------------
    auto* rp = app.add_subcommand("report", "aggregate a results tree into tables and charts");
    std::string rp_root = "results";
    rp->add_option("--out-root", rp_root, "results tree root");

    // ---- plan -------------------------------------------------------------------------
    auto* pl = app.add_subcommand("plan", "enumerate (and optionally execute) an experiment matrix");
    std::string pl_kind = "non-radiology", pl_model = "clipseg", pl_out_file, pl_out_root = "results";
    std::string pl_config, pl_sidecar, pl_plan_file;
    uint64_t pl_seed = 0, pl_provider_seed = 1234;
    int pl_side = 32;
    bool pl_execute = false;
    pl->add_option("--kind", pl_kind, "non-radiology|radiology|pooled");
    pl->add_option("--model", pl_model, "model kind");
    pl->add_option("--plan", pl_plan_file, "load an existing plan JSON instead of enumerating");
    pl->add_option("--out", pl_out_file, "write the plan JSON here");
    pl->add_option("--out-root", pl_out_root, "results tree root (with --execute)");
    pl->add_option("--config", pl_config, "train config JSON (with --execute)");
    pl->add_option("--sidecar", pl_sidecar, "attribute sidecar JSON (with --execute)");
    pl->add_option("--seed", pl_seed, "plan seed");
    pl->add_option("--provider-seed", pl_provider_seed, "toy weight provider seed");
    pl->add_option("--side", pl_side, "toy input side");
    pl->add_flag("--execute", pl_execute, "run the plan");

    // ---- make-synthetic (desk-scale stand-in data) --------------------------------------
    auto* ms = app.add_subcommand("make-synthetic", "write synthetic datasets in the expected layout");
    std::vector<std::string> ms_names = {"kvasir-seg", "clinicdb", "bkai"};
    int ms_train = 8, ms_val = 2, ms_test = 2, ms_side = 32;
    uint64_t ms_seed = 0;
    ms->add_option("--datasets", ms_names, "dataset names to synthesize");
    ms->add_option("--train", ms_train, "train samples per dataset");
    ms->add_option("--val", ms_val, "val samples per dataset");
    ms->add_option("--test", ms_test, "test samples per dataset");
    ms->add_option("--side", ms_side, "image side");
    ms->add_option("--seed", ms_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto& desc = data::find_descriptor(gen_dataset);
            const auto cfg = make_prompting(gen_sidecar, gen_seed);
            const auto ptype = prompt::prompt_type_from_name(gen_ptype);
            std::string masks = gen_masks;
            if (fs::is_directory(fs::path(gen_masks) / "masks")) masks = (fs::path(gen_masks) / "masks").string();
            const auto records = data::generate_prompt_records_from_masks(desc, masks, ptype, cfg);
            data::write_prompt_jsonl(gen_out, records);
            std::cout << "wrote " << records.size() << " prompt records to " << gen_out << "\n";
        } else if (*tr) {
            experiment::RunnerOptions options;
            options.data_root = data_root;
            options.out_root = tr_out;
            options.toy_side = tr_side;
            options.provider_seed = tr_provider_seed;
            options.pretrained_manifest = tr_manifest;
            options.sidecar_path = tr_sidecar;
            options.freetext_prompts = tr_freetext;
            options.verbose = true;
            train::TrainConfig tcfg =
                tr_config.empty() ? train::config_for_model(tr_model) : train::load_train_config(tr_config);
            if (tr_epochs > 0) tcfg.max_epochs = tr_epochs;
            options.train_config = tcfg;
            experiment::RunSpec spec{tr_model, tr_freeze, tr_data,
                                     prompt::prompt_type_from_name(tr_ptype), tr_seed};
            const auto outcome = experiment::run_one(spec, options);
            std::cout << (outcome.skipped ? "skipped (already complete): " : "finished: ")
                      << outcome.run_id << "\n";
            if (!outcome.skipped)
                std::cout << "best val dice " << outcome.best_val_dice << " after "
                          << outcome.epochs_run << " epochs -> " << outcome.run_dir << "\n";
        } else if (*ev) {
            auto model = load_model(ev_model, ev_side, ev_provider_seed, ev_ckpt, ev_manifest);
            auto handle = data::register_dataset(data::find_descriptor(ev_data),
                                                 (fs::path(data_root) / ev_data).string());
            evaluation::GroupKey key;
            key.model = ev_model;
            key.train_data = ev_ckpt.empty() ? "zero-shot" : "finetuned";
            const auto report =
                evaluation::evaluate(*model, *handle, data::split_from_name(ev_split),
                                     prompt::prompt_type_from_name(ev_ptype),
                                     make_prompting(ev_sidecar, ev_seed), key);
            std::cout << evaluation::reports_to_csv({report});
            if (!ev_out.empty()) evaluation::write_reports_csv(ev_out, {report});
        } else if (*pe) {
            auto model = load_model(pe_model, pe_side, pe_provider_seed, pe_ckpt, pe_manifest);
            auto handle = data::register_dataset(data::find_descriptor(pe_data),
                                                 (fs::path(data_root) / pe_data).string());
            const auto ptype = prompt::prompt_type_from_name(pe_ptype);
            const auto prompting = make_prompting(pe_sidecar, pe_seed);
            std::vector<prompt::AttributeSet> attrs;
            const auto triplets = data::load_prompted_triplets(
                *handle, data::split_from_name(pe_split), ptype, prompting, &attrs);
            const auto specs =
                pe_specs.empty()
                    ? robustness::default_specs(handle->descriptor().family, ptype, attrs, pe_seed)
                    : robustness::load_suite_config(pe_specs);
            robustness::SuiteOptions options;
            options.compose_seed = pe_seed;
            options.out_dir = pe_out;
            const auto suite = robustness::run_perturbation_suite(
                *model, triplets, attrs, handle->descriptor().family, ptype, specs, options);
            std::cout << "base dice " << suite.base.mean_x100() << "\n";
            for (const auto& r : suite.results)
                std::cout << r.spec.label() << ": " << (r.absolute ? "absolute " : "relative ")
                          << "change " << r.change << "\n";
        } else if (*ce) {
            std::map<std::string, std::unique_ptr<models::SegModel>> owned;
            std::map<std::string, models::SegModel*> by_train;
            for (const std::string& pair : ce_ckpts) {
                const auto eq = pair.find('=');
                if (eq == std::string::npos) throw Error("--checkpoint expects name=path: " + pair);
                const std::string name = pair.substr(0, eq), path = pair.substr(eq + 1);
                owned[name] = load_model(ce_model, ce_side, ce_provider_seed, path, "");
                by_train[name] = owned[name].get();
            }
            if (ce_tests.empty()) ce_tests = data::endoscopy_all_datasets();
            std::vector<std::shared_ptr<data::DatasetHandle>> handles;
            for (const std::string& name : ce_tests)
                handles.push_back(data::register_dataset(data::find_descriptor(name),
                                                         (fs::path(data_root) / name).string()));
            const auto matrix = evaluation::cross_dataset_eval(
                by_train, handles, data::Split::test, prompt::prompt_type_from_name(ce_ptype),
                make_prompting(ce_sidecar, ce_seed));
            experiment::write_cross_matrix(ce_out, matrix);
            std::cout << experiment::cross_matrix_markdown(matrix);
        } else if (*rp) {
            experiment::write_report(rp_root);
            std::cout << "report written under " << rp_root << "/report\n";
        } else if (*pl) {
            experiment::ExperimentPlan plan;
            if (!pl_plan_file.empty()) {
                plan = experiment::load_plan(pl_plan_file);
            } else if (pl_kind == "non-radiology") {
                plan = experiment::non_radiology_plan(pl_model, pl_seed);
            } else if (pl_kind == "radiology") {
                plan = experiment::radiology_plan(pl_model, pl_seed);
            } else if (pl_kind == "pooled") {
                plan = experiment::pooled_plan(pl_model, prompt::PromptType::P6, pl_seed);
            } else {
                throw Error("unknown plan kind: " + pl_kind);
            }
            std::cout << "plan has " << plan.runs.size() << " runs\n";
            if (!pl_out_file.empty()) experiment::save_plan(pl_out_file, plan);
            if (pl_execute) {
                experiment::RunnerOptions options;
                options.data_root = data_root;
                options.out_root = pl_out_root;
                options.toy_side = pl_side;
                options.provider_seed = pl_provider_seed;
                options.sidecar_path = pl_sidecar;
                if (!pl_config.empty()) options.train_config = train::load_train_config(pl_config);
                options.verbose = true;
                const auto outcomes = experiment::run_plan(plan, options);
                int done = 0, skipped = 0;
                for (const auto& o : outcomes) (o.skipped ? skipped : done)++;
                std::cout << done << " runs executed, " << skipped << " skipped\n";
            }
        } else if (*ms) {
            for (const std::string& name : ms_names) {
                const auto& desc = data::find_descriptor(name);
                const std::array<int, 3> counts =
                    desc.test_only ? std::array<int, 3>{0, 0, ms_test}
                                   : std::array<int, 3>{ms_train, ms_val, ms_test};
                data::write_synthetic_dataset((fs::path(data_root) / name).string(), desc, counts,
                                              ms_side, derive_seed(ms_seed, name));
                std::cout << "wrote synthetic " << name << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
