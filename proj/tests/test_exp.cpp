#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "vlseg/data/synthetic.hpp"
#include "vlseg/exp/runner.hpp"

using namespace vlseg;
namespace fs = std::filesystem;
using experiment::ExperimentPlan;
using experiment::RunSpec;

namespace {

const char* kDataRoot = "/tmp/vlseg_test_exp_data";
const char* kOutRoot = "/tmp/vlseg_test_exp_out";

void prepare_data_root() {
    static bool done = false;
    if (done) return;
    fs::remove_all(kDataRoot);
    for (const char* name : {"kvasir-seg", "clinicdb", "bkai"}) {
        const auto desc = data::find_descriptor(name);
        data::write_synthetic_dataset(std::string(kDataRoot) + "/" + name, desc, {6, 2, 2}, 32,
                                      fnv1a(name));
    }
    done = true;
}

experiment::RunnerOptions tiny_options() {
    experiment::RunnerOptions options;
    options.data_root = kDataRoot;
    options.out_root = kOutRoot;
    options.toy_side = 32;
    train::TrainConfig tcfg = train::config_for_model("unet");
    tcfg.max_epochs = 2;
    tcfg.batch_size = 4;
    options.train_config = tcfg;
    return options;
}

}  // namespace

TEST_CASE("plan enumeration: 50 non-radiology and 22 radiology runs per model") {
    const auto nonrad = experiment::non_radiology_plan("clipseg");
    CHECK(nonrad.runs.size() == 50);  // 10 prompt types x 5 datasets
    std::set<std::string> datasets, ids;
    for (const auto& run : nonrad.runs) {
        datasets.insert(run.train_data);
        ids.insert(run.run_id());
    }
    CHECK(datasets.size() == 5);
    CHECK(ids.size() == 50);

    const auto rad = experiment::radiology_plan("cris");
    CHECK(rad.runs.size() == 22);  // CAMUS 8 + BUSI 7 + CheXlocalize 7

    const auto pooled = experiment::pooled_plan("cris", prompt::PromptType::P6);
    CHECK(pooled.runs.size() == 2);
}

TEST_CASE("plan validation: duplicates and test-only train data are rejected") {
    ExperimentPlan dup;
    dup.runs = {RunSpec{"clipseg", false, "kvasir-seg", prompt::PromptType::P1, 0},
                RunSpec{"clipseg", false, "kvasir-seg", prompt::PromptType::P1, 0}};
    CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("duplicate run id"), Error);

    ExperimentPlan etis;
    etis.runs = {RunSpec{"clipseg", false, "etis", prompt::PromptType::P1, 0}};
    CHECK_THROWS_WITH_AS(etis.validate(), doctest::Contains("test-only"), Error);

    ExperimentPlan badp;
    badp.runs = {RunSpec{"clipseg", false, "busi", prompt::PromptType::P9, 0}};
    CHECK_THROWS_WITH_AS(badp.validate(), doctest::Contains("unavailable"), Error);
}

TEST_CASE("plan json round trip") {
    const auto plan = experiment::radiology_plan("biomedclipseg", 7);
    const auto restored = experiment::plan_from_json(experiment::plan_to_json(plan));
    REQUIRE(restored.runs.size() == plan.runs.size());
    for (size_t i = 0; i < plan.runs.size(); ++i)
        CHECK(restored.runs[i].run_id() == plan.runs[i].run_id());
}

TEST_CASE("run_one: results tree, idempotence, manifest") {
    prepare_data_root();
    fs::remove_all(kOutRoot);
    const auto options = tiny_options();
    RunSpec spec{"unet", false, "kvasir-seg", prompt::PromptType::P1, 3};

    const auto first = experiment::run_one(spec, options);
    CHECK_FALSE(first.skipped);
    CHECK(first.epochs_run == 2);

    const fs::path run_dir(first.run_dir);
    CHECK(fs::exists(run_dir / "manifest.json"));
    CHECK(fs::exists(run_dir / "prompts.jsonl"));
    CHECK(fs::exists(run_dir / "history.csv"));
    CHECK(fs::exists(run_dir / "checkpoints" / "best.ckpt"));
    CHECK(fs::exists(run_dir / "checkpoints" / "last.ckpt"));
    CHECK(fs::exists(run_dir / "eval" / "test.csv"));
    CHECK(fs::exists(run_dir / "figs" / "test_dice.svg"));

    {
        std::ifstream in(run_dir / "manifest.json");
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        CHECK(text.find("\"status\": \"complete\"") != std::string::npos);
        CHECK(text.find("\"version\"") != std::string::npos);
        CHECK(text.find("\"checksum\"") != std::string::npos);
    }

    // rerun after completion: checksum matches, zero new training steps
    const auto second = experiment::run_one(spec, options);
    CHECK(second.skipped);
    CHECK(second.epochs_run == 0);
}

TEST_CASE("run_plan executes every run and a later rerun skips all") {
    prepare_data_root();
    const auto options = tiny_options();
    ExperimentPlan plan;
    plan.runs = {RunSpec{"unet", false, "kvasir-seg", prompt::PromptType::P0, 11},
                 RunSpec{"unet", false, "clinicdb", prompt::PromptType::P1, 11}};
    const auto outcomes = experiment::run_plan(plan, options);
    REQUIRE(outcomes.size() == 2);

    const auto again = experiment::run_plan(plan, options);
    for (const auto& o : again) {
        CHECK(o.skipped);
        CHECK(o.epochs_run == 0);
    }
}

TEST_CASE("vlsm run trains and evaluates at toy scale") {
    prepare_data_root();
    auto options = tiny_options();
    train::TrainConfig tcfg = train::config_for_model("clipseg");
    tcfg.max_epochs = 2;
    tcfg.batch_size = 4;
    options.train_config = tcfg;
    RunSpec spec{"clipseg", false, "bkai", prompt::PromptType::P1, 21};
    const auto outcome = experiment::run_one(spec, options);
    CHECK_FALSE(outcome.skipped);
    CHECK(outcome.best_val_dice >= 0.0);
    CHECK(fs::exists(fs::path(outcome.run_dir) / "eval" / "test.csv"));
}

TEST_CASE("report aggregates the results tree") {
    prepare_data_root();
    experiment::write_report(kOutRoot);
    CHECK(fs::exists(fs::path(kOutRoot) / "report" / "all_results.csv"));
    bool found_table = false, found_fig = false;
    for (const auto& e : fs::recursive_directory_iterator(fs::path(kOutRoot) / "report")) {
        const std::string name = e.path().filename().string();
        found_table |= name.rfind("table_finetuning_", 0) == 0;
        found_fig |= e.path().extension() == ".svg";
    }
    CHECK(found_table);
    CHECK(found_fig);
}

TEST_CASE("cross matrix markdown marks in-distribution cells and gaps") {
    evaluation::CrossDatasetMatrix matrix;
    matrix.train_names = {"kvasir-seg", "clinicdb"};
    matrix.test_names = {"kvasir-seg", "clinicdb", "etis"};
    evaluation::EvalReport r;
    r.per_sample = {0.8, 0.9};
    for (const auto& train : matrix.train_names)
        for (const auto& test : matrix.test_names)
            if (!(train == "clinicdb" && test == "etis"))
                matrix.cells.emplace(std::make_pair(train, test), r);
    const std::string md = experiment::cross_matrix_markdown(matrix);
    CHECK(md.find("85.00 (id)") != std::string::npos);  // diagonal flagged
    CHECK(md.find(" - |") != std::string::npos);        // missing cell dash
    experiment::write_cross_matrix(kOutRoot, matrix);
    CHECK(fs::exists(fs::path(kOutRoot) / "cross" / "matrix.md"));
    CHECK(fs::exists(fs::path(kOutRoot) / "cross" / "matrix.csv"));
}

TEST_CASE("toy-provider runs are fully reproducible from config + seed") {
    prepare_data_root();
    const auto options = tiny_options();
    RunSpec spec{"unet", false, "clinicdb", prompt::PromptType::P1, 77};

    auto read = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    };

    const auto first = experiment::run_one(spec, options);
    const std::string eval1 = read(fs::path(first.run_dir) / "eval" / "test.csv");
    const std::string hist1 = read(fs::path(first.run_dir) / "history.csv");

    fs::remove_all(first.run_dir);
    const auto second = experiment::run_one(spec, options);
    CHECK_FALSE(second.skipped);
    CHECK(read(fs::path(second.run_dir) / "eval" / "test.csv") == eval1);
    CHECK(read(fs::path(second.run_dir) / "history.csv") == hist1);
}

TEST_CASE("masks-only prompt generation") {
    prepare_data_root();
    data::PromptingConfig cfg;
    const auto records = data::generate_prompt_records_from_masks(
        data::find_descriptor("kvasir-seg"), std::string(kDataRoot) + "/kvasir-seg/masks",
        prompt::PromptType::P1, cfg);
    CHECK(records.size() == 10);  // 6 + 2 + 2 samples, one class
    for (const auto& rec : records) CHECK(rec.prompt == "polyp");
}
