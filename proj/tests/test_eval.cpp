#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "vlseg/data/synthetic.hpp"
#include "vlseg/eval/evaluate.hpp"
#include "vlseg/eval/report_io.hpp"
#include "vlseg/models/vlsm.hpp"

using namespace vlseg;
namespace fs = std::filesystem;

namespace {

// Set-based oracle, computed over explicit coordinate sets.
double oracle_dice(const Mask& a, const Mask& b) {
    std::set<std::pair<int, int>> pa, pb;
    for (int y = 0; y < a.h; ++y)
        for (int x = 0; x < a.w; ++x) {
            if (a.at(y, x)) pa.emplace(y, x);
            if (b.at(y, x)) pb.emplace(y, x);
        }
    if (pa.empty() && pb.empty()) return 1.0;
    size_t inter = 0;
    for (const auto& p : pa) inter += pb.count(p);
    return 2.0 * static_cast<double>(inter) / static_cast<double>(pa.size() + pb.size());
}

// Emits a fixed logit everywhere; input side equals output side.
class ConstantModel : public models::SegModel {
public:
    ConstantModel(int side, double logit) : side_(side), logit_(logit) {}
    nn::Var forward_logits(const Image&, const std::string&) override {
        return nn::make_var({1, side_, side_}, logit_);
    }
    models::InputSpec input_spec() const override { return models::InputSpec{side_}; }
    int output_side() const override { return side_; }
    bool uses_prompts() const override { return false; }
    std::string kind() const override { return "constant"; }
    nn::ParamStore& store() override { return store_; }

private:
    int side_;
    double logit_;
    nn::ParamStore store_;
};

// Returns the ground truth it was given, keyed by sample prompt.
class OracleModel : public models::SegModel {
public:
    explicit OracleModel(int side) : side_(side) {}
    void remember(const data::SampleTriplet& t) { masks_[t.prompt] = t.mask; }
    nn::Var forward_logits(const Image&, const std::string& prompt) override {
        const Mask& m = masks_.at(prompt);
        std::vector<double> logits(m.v.size());
        for (size_t i = 0; i < m.v.size(); ++i) logits[i] = m.v[i] ? 10.0 : -10.0;
        return nn::make_var({1, m.h, m.w}, std::move(logits));
    }
    models::InputSpec input_spec() const override { return models::InputSpec{side_}; }
    int output_side() const override { return side_; }
    bool uses_prompts() const override { return true; }
    std::string kind() const override { return "oracle"; }
    nn::ParamStore& store() override { return store_; }

private:
    int side_;
    std::map<std::string, Mask> masks_;
    nn::ParamStore store_;
};

}  // namespace

TEST_CASE("dice_score matches the set oracle on random masks") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        Mask a(8, 8), b(8, 8);
        for (auto& v : a.v) v = rng() % 2;
        for (auto& v : b.v) v = rng() % 2;
        const double got = evaluation::dice_score(a, b);
        CHECK(std::abs(got - oracle_dice(a, b)) < 1e-12);
        CHECK(got == evaluation::dice_score(b, a));  // symmetry
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("dice_score conventions") {
    Mask a(4, 4), b(4, 4);
    CHECK(evaluation::dice_score(a, b) == 1.0);  // empty vs empty

    a.at(0, 0) = 1;
    CHECK(evaluation::dice_score(a, b) == 0.0);

    Mask c(2, 2), d(2, 2);
    c.v = {1, 1, 0, 0};
    d.v = {1, 0, 1, 0};
    CHECK(evaluation::dice_score(c, d) == doctest::Approx(0.5).epsilon(1e-15));

    Mask self(4, 4);
    self.at(1, 1) = 1;
    self.at(2, 2) = 1;
    CHECK(evaluation::dice_score(self, self) == 1.0);

    Mask wrong(3, 4);
    CHECK_THROWS_WITH_AS(evaluation::dice_score(a, wrong), "dice_score: shape mismatch", Error);
}

TEST_CASE("predict_mask: saturation and strict threshold") {
    data::SampleTriplet t;
    t.image = Image(20, 24, 3, 0.5f);
    t.mask = Mask(20, 24);
    t.prompt = "x";

    ConstantModel high(8, 10.0);
    const Mask all_ones = evaluation::predict_mask(high, t);
    CHECK(all_ones.h == 20);
    CHECK(all_ones.w == 24);
    CHECK(all_ones.foreground() == 20 * 24);

    ConstantModel zero(8, 0.0);  // sigmoid(0) = 0.5, not > 0.5
    CHECK(evaluation::predict_mask(zero, t).foreground() == 0);
}

TEST_CASE("evaluate: oracle model scores 100, constant-zero model scores 0") {
    const auto blobs = data::make_blob_dataset({6, 32, 3});
    OracleModel oracle(32);
    std::vector<data::SampleTriplet> triplets;
    for (auto t : blobs) {
        t.prompt = t.sample_id;  // the oracle keys on the prompt; make it unique
        oracle.remember(t);
        triplets.push_back(t);
    }
    evaluation::GroupKey key{"oracle", "zero-shot", "synthetic-blobs", "P6", ""};
    const auto report = evaluation::evaluate_triplets(oracle, triplets, key);
    CHECK(report.count() == 6);
    CHECK(report.mean_x100() == doctest::Approx(100.0));
    CHECK(report.std_x100() == doctest::Approx(0.0));

    ConstantModel none(32, -10.0);
    const auto zero_report = evaluation::evaluate_triplets(none, triplets, key);
    CHECK(zero_report.mean_x100() == doctest::Approx(0.0));

    std::vector<data::SampleTriplet> empty;
    CHECK_THROWS_WITH_AS(evaluation::evaluate_triplets(none, empty, key), "empty split", Error);
}

TEST_CASE("report mean is the arithmetic mean of per-sample dice") {
    Rng rng(5);
    evaluation::EvalReport r;
    double sum = 0;
    for (int i = 0; i < 101; ++i) {
        const double d = static_cast<double>(rng() % 1000) / 1000.0;
        r.per_sample.push_back(d);
        sum += d;
    }
    CHECK(std::abs(r.mean_x100() - 100.0 * sum / 101.0) < 1e-9);
}

TEST_CASE("cross_dataset_eval: 3x6 matrix, diagonal flagged, missing checkpoint") {
    const char* root = "/tmp/vlseg_test_cross";
    fs::remove_all(root);
    std::vector<std::shared_ptr<data::DatasetHandle>> test_handles;
    for (const std::string& name : data::endoscopy_all_datasets()) {
        auto desc = data::find_descriptor(name);
        data::write_synthetic_dataset(std::string(root) + "/" + name, desc, {0, 0, 2}, 16, fnv1a(name));
        test_handles.push_back(data::register_dataset(desc, std::string(root) + "/" + name));
    }

    ConstantModel m1(8, 1.0), m2(8, -1.0), m3(8, 2.0);
    std::map<std::string, models::SegModel*> by_train = {
        {"kvasir-seg", &m1}, {"clinicdb", &m2}, {"bkai", &m3}};

    data::PromptingConfig prompting;
    const auto matrix = evaluation::cross_dataset_eval(by_train, test_handles, data::Split::test,
                                                       prompt::PromptType::P1, prompting);
    CHECK(matrix.cells.size() == 18);
    CHECK(matrix.train_names.size() == 3);
    CHECK(matrix.test_names.size() == 6);
    int in_dist = 0;
    for (const auto& [cell, report] : matrix.cells) {
        CHECK(report.count() == 2);
        in_dist += matrix.in_distribution(cell.first, cell.second);
    }
    CHECK(in_dist == 3);

    // identical checkpoints give identical rows
    std::map<std::string, models::SegModel*> same = {{"kvasir-seg", &m1}, {"clinicdb", &m1}};
    const auto twin = evaluation::cross_dataset_eval(same, test_handles, data::Split::test,
                                                     prompt::PromptType::P1, prompting);
    for (const auto& test : twin.test_names)
        CHECK(twin.at("kvasir-seg", test).per_sample == twin.at("clinicdb", test).per_sample);

    std::map<std::string, models::SegModel*> broken = {{"kvasir-seg", nullptr}};
    CHECK_THROWS_WITH_AS(evaluation::cross_dataset_eval(broken, test_handles, data::Split::test,
                                                        prompt::PromptType::P1, prompting),
                         doctest::Contains("missing checkpoint for cell"), Error);
}

TEST_CASE("report writers") {
    evaluation::EvalReport r;
    r.key = {"clipseg", "kvasir-seg", "kvasir-seg", "P6", "opposite:size"};
    r.per_sample = {0.5, 0.75, 1.0};
    const std::string csv = evaluation::reports_to_csv({r});
    CHECK(csv.find("model,train_data,test_data,ptype,perturbation,n,dice_mean,dice_std") !=
          std::string::npos);
    CHECK(csv.find("clipseg,kvasir-seg,kvasir-seg,P6,opposite:size,3,75.0000") != std::string::npos);

    const char* dir = "/tmp/vlseg_test_reports";
    fs::create_directories(dir);
    evaluation::write_reports_json(std::string(dir) + "/r.json", {r});
    std::ifstream in(std::string(dir) + "/r.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"dice_mean\"") != std::string::npos);

    evaluation::write_grouped_bar_svg(std::string(dir) + "/chart.svg", "demo", {"P0", "P1"},
                                      {{"clipseg", {50.0, 75.0}, {5.0, 2.0}}});
    std::ifstream svg_in(std::string(dir) + "/chart.svg");
    std::string svg((std::istreambuf_iterator<char>(svg_in)), std::istreambuf_iterator<char>());
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("clipseg") != std::string::npos);
}
