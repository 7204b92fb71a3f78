#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "vlseg/train/fit.hpp"

using namespace vlseg;
using train::LossConfig;

namespace {

// One trainable logit per pixel; ignores image and prompt. Fast enough to
// exercise the full fit loop in microseconds.
class BiasModel : public models::SegModel {
public:
    explicit BiasModel(int side, double init = 0.0) : side_(side) {
        bias_ = store_.add_constant("bias", {1, side, side}, init);
    }
    nn::Var forward_logits(const Image&, const std::string&) override { return nn::scale(bias_, 1.0); }
    models::InputSpec input_spec() const override { return models::InputSpec{side_}; }
    int output_side() const override { return side_; }
    bool uses_prompts() const override { return false; }
    std::string kind() const override { return "bias"; }
    nn::ParamStore& store() override { return store_; }
    nn::Var bias_;

private:
    int side_;
    nn::ParamStore store_;
};

data::SampleTriplet make_sample(int side, bool top_half, const std::string& id) {
    data::SampleTriplet t;
    t.sample_id = id;
    t.dataset = "synthetic";
    t.class_name = "blob";
    t.image = Image(side, side, 3, 0.5f);
    t.mask = Mask(side, side);
    for (int y = 0; y < (top_half ? side / 2 : side); ++y)
        for (int x = 0; x < side; ++x) t.mask.at(y, x) = 1;
    t.prompt = "blob";
    return t;
}

}  // namespace

TEST_CASE("dice_loss worked examples") {
    CHECK(train::dice_loss(std::vector<double>{1, 1, 1, 1}, std::vector<double>{1, 1, 1, 1}, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
    // p = 0.5 everywhere, t = [1,1,0,0]: 1 - (2*1+1)/(2+2+1) = 0.4
    CHECK(train::dice_loss(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<double>{1, 1, 0, 0},
                           1.0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(train::dice_loss(std::vector<double>{0, 0, 0, 0}, std::vector<double>{0, 0, 0, 0}, 1.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS(train::dice_loss(std::vector<double>{0.5}, std::vector<double>{1, 0}, 1.0));
}

TEST_CASE("combined_loss worked examples") {
    const std::vector<double> zeros(4, 0.0);
    const std::vector<double> target = {1, 0, 1, 0};
    LossConfig cfg;

    // zero logits: BCE term is 0.2*ln2 regardless of target
    const double combined = train::combined_loss(zeros, target, cfg);
    const std::vector<double> half(4, 0.5);
    const double dice_term = train::dice_loss(half, target, cfg.dice_smooth);
    CHECK(combined - dice_term == doctest::Approx(0.2 * std::log(2.0)).epsilon(1e-9));
    CHECK(combined - dice_term == doctest::Approx(0.13863).epsilon(1e-4));

    // saturated perfect prediction
    const std::vector<double> sat = {30, -30, 30, -30};
    CHECK(train::combined_loss(sat, target, cfg) < 1e-3);

    // doubling the bce weight doubles (loss - dice term)
    LossConfig heavy = cfg;
    heavy.bce_weight = 0.4;
    const std::vector<double> logits = {0.7, -1.2, 0.3, 2.0};
    const std::vector<double> probs = {1 / (1 + std::exp(-0.7)), 1 / (1 + std::exp(1.2)),
                                       1 / (1 + std::exp(-0.3)), 1 / (1 + std::exp(-2.0))};
    const double dice_only = train::dice_loss(probs, target, 1.0);
    const double light_extra = train::combined_loss(logits, target, cfg) - dice_only;
    const double heavy_extra = train::combined_loss(logits, target, heavy) - dice_only;
    CHECK(heavy_extra == doctest::Approx(2.0 * light_extra).epsilon(1e-12));
}

TEST_CASE("combined loss is non-negative and zero only at exactness") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(16), target(16);
        for (auto& l : logits) l = nn::gaussian(rng) * 3;
        for (auto& t : target) t = rng() % 2;
        CHECK(train::combined_loss(logits, target, {}) >= 0.0);
    }
}

TEST_CASE("graph loss agrees with the plain reference route") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> lv(12), tv(12);
        for (auto& l : lv) l = nn::gaussian(rng) * 2;
        for (auto& t : tv) t = rng() % 2;
        nn::Var logits = nn::make_var({3, 4}, lv);
        nn::Var target = nn::make_var({3, 4}, tv);
        const double graph = train::combined_loss_graph(logits, target, {})->v[0];
        const double plain = train::combined_loss(lv, tv, {});
        CHECK(graph == doctest::Approx(plain).epsilon(1e-12));
    }
}

TEST_CASE("plateau: six flat epochs reduce 2e-3 to 2e-4 at exactly epoch 6") {
    train::PlateauScheduler sched(2e-3, 0.1, 5);
    for (int epoch = 1; epoch <= 5; ++epoch) {
        sched.step(1.0);
        CHECK(sched.lr() == doctest::Approx(2e-3).epsilon(1e-15));
    }
    sched.step(1.0);  // epoch 6
    CHECK(sched.lr() == doctest::Approx(2e-4).epsilon(1e-15));
}

TEST_CASE("plateau: improvement resets the counter; floor is honored") {
    train::PlateauScheduler sched(1e-2, 0.1, 2, 1e-4);
    sched.step(1.0);   // best
    sched.step(1.0);   // stale 1
    sched.step(0.5);   // improvement, reset
    sched.step(0.5);   // stale 1
    CHECK(sched.lr() == doctest::Approx(1e-2));
    sched.step(0.5);   // stale 2 -> reduce
    CHECK(sched.lr() == doctest::Approx(1e-3));
    sched.step(0.5);
    sched.step(0.5);  // reduce again
    CHECK(sched.lr() == doctest::Approx(1e-4));
    sched.step(0.5);
    sched.step(0.5);  // would go below the floor
    CHECK(sched.lr() == doctest::Approx(1e-4));
}

TEST_CASE("early stopping: improving metric never stops") {
    train::EarlyStopper stopper(3);
    for (int epoch = 0; epoch < 100; ++epoch) {
        CHECK(stopper.step(static_cast<double>(epoch)));
        CHECK_FALSE(stopper.should_stop());
    }
    for (int i = 0; i < 3; ++i) stopper.step(0.0);
    CHECK(stopper.should_stop());
}

TEST_CASE("cosine schedule endpoints") {
    CHECK(train::cosine_lr(1e-3, 1, 100) == doctest::Approx(1e-3));
    CHECK(train::cosine_lr(1e-3, 100, 100) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("per-model training recipes") {
    const auto clipseg = train::config_for_model("clipseg");
    CHECK(clipseg.lr == doctest::Approx(2e-3));
    CHECK(clipseg.batch_size == 128);
    CHECK(clipseg.early_stop_patience == 50);
    CHECK(clipseg.weight_decay == doctest::Approx(1e-3));
    CHECK(clipseg.optimizer == nn::OptimizerKind::adamw);
    CHECK(clipseg.bce_weight == doctest::Approx(0.2));
    CHECK(clipseg.plateau_patience == 5);
    CHECK(clipseg.plateau_factor == doctest::Approx(0.1));

    const auto cris = train::config_for_model("cris");
    CHECK(cris.lr == doctest::Approx(2e-5));
    CHECK(cris.batch_size == 32);
    CHECK(cris.early_stop_patience == 10);

    const auto unet = train::config_for_model("unet");
    CHECK(unet.optimizer == nn::OptimizerKind::adam);
    CHECK(unet.lr == doctest::Approx(1e-3));
    CHECK(unet.weight_decay == 0.0);
    CHECK(unet.bce_weight == 0.0);  // Dice loss only
}

TEST_CASE("train config json round trip and validation") {
    train::TrainConfig cfg = train::config_for_model("cris");
    cfg.scheduler = train::SchedulerKind::cosine;
    cfg.max_epochs = 7;
    cfg.seed = 99;
    const auto restored = train::train_config_from_json(train::train_config_to_json(cfg));
    CHECK(restored.lr == cfg.lr);
    CHECK(restored.scheduler == train::SchedulerKind::cosine);
    CHECK(restored.max_epochs == 7);
    CHECK(restored.seed == 99);

    train::TrainConfig bad;
    bad.plateau_factor = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("hyperparameter grid covers the search table") {
    train::HyperGrid grid;
    const auto configs = grid.enumerate(train::TrainConfig{});
    // {adam, adamw} x {1e-5..1e-2} x {16,32,64,128} x {cosine, constant, plateau}
    CHECK(configs.size() == 2 * 4 * 4 * 3);
}

TEST_CASE("fit: lr sequence is initial * 0.1^k and non-increasing") {
    const int side = 4;
    std::vector<data::SampleTriplet> tr = {make_sample(side, true, "a"), make_sample(side, false, "b")};
    BiasModel model(side);
    train::TrainConfig cfg;
    cfg.lr = 2e-3;
    cfg.batch_size = 2;
    cfg.max_epochs = 30;
    cfg.plateau_patience = 3;
    cfg.early_stop_patience = 100;
    const auto result = train::fit(model, tr, tr, cfg);
    double prev = cfg.lr;
    for (const auto& rec : result.state.history) {
        CHECK(rec.lr <= prev + 1e-18);
        const double k = std::log10(cfg.lr / rec.lr);
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        prev = rec.lr;
    }
}

TEST_CASE("fit: epoch-level determinism under a fixed seed") {
    const int side = 4;
    std::vector<data::SampleTriplet> tr;
    for (int i = 0; i < 6; ++i) tr.push_back(make_sample(side, i % 2 == 0, "s" + std::to_string(i)));
    train::TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.batch_size = 2;
    cfg.max_epochs = 10;
    cfg.seed = 17;

    BiasModel m1(side), m2(side);
    const auto r1 = train::fit(m1, tr, tr, cfg);
    const auto r2 = train::fit(m2, tr, tr, cfg);
    REQUIRE(r1.state.history.size() == r2.state.history.size());
    for (size_t i = 0; i < r1.state.history.size(); ++i) {
        CHECK(r1.state.history[i].train_loss == doctest::Approx(r2.state.history[i].train_loss).epsilon(1e-6));
        CHECK(r1.state.history[i].val_loss == doctest::Approx(r2.state.history[i].val_loss).epsilon(1e-6));
    }
    CHECK(m1.bias_->v == m2.bias_->v);
}

TEST_CASE("fit: resumed run reproduces the uninterrupted history") {
    const int side = 4;
    std::vector<data::SampleTriplet> tr;
    for (int i = 0; i < 4; ++i) tr.push_back(make_sample(side, i % 2 == 0, "s" + std::to_string(i)));
    train::TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.batch_size = 2;
    cfg.seed = 5;

    cfg.max_epochs = 8;
    BiasModel straight(side);
    const auto full = train::fit(straight, tr, tr, cfg);

    BiasModel resumed(side);
    train::TrainConfig first_half = cfg;
    first_half.max_epochs = 4;
    train::TrainState mid_state;
    nn::Optimizer::State mid_optim;
    std::vector<std::vector<double>> mid_params;
    train::FitOptions opts;
    opts.on_epoch = [&](const train::TrainState& st, const nn::Optimizer& opt, models::SegModel& m) {
        mid_state = st;
        mid_optim = opt.state();
        mid_params = m.store().snapshot();
    };
    train::fit(resumed, tr, tr, first_half, opts);

    resumed.store().restore(mid_params);  // fit leaves best params; resume from last
    train::FitOptions resume_opts;
    resume_opts.resume_state = mid_state;
    resume_opts.resume_optimizer = mid_optim;
    const auto second = train::fit(resumed, tr, tr, cfg, resume_opts);

    REQUIRE(second.state.history.size() + 4 == full.state.history.size() + mid_state.history.size());
    // compare the tail epochs against the uninterrupted run
    for (size_t i = 4; i < full.state.history.size(); ++i) {
        const auto& a = full.state.history[i];
        const auto& b = second.state.history[i - 4 + mid_state.history.size()];
        CHECK(a.epoch == b.epoch);
        CHECK(a.train_loss == doctest::Approx(b.train_loss).epsilon(1e-12));
        CHECK(a.val_dice == doctest::Approx(b.val_dice).epsilon(1e-12));
    }
}

TEST_CASE("fit: non-finite loss aborts with diagnostics") {
    const int side = 4;
    std::vector<data::SampleTriplet> tr = {make_sample(side, true, "a")};
    BiasModel model(side, std::numeric_limits<double>::quiet_NaN());
    train::TrainConfig cfg;
    cfg.max_epochs = 3;
    try {
        train::fit(model, tr, tr, cfg);
        FAIL("expected TrainAbort");
    } catch (const train::TrainAbort& abort) {
        CHECK(abort.epoch == 1);
        CHECK(abort.batch == 0);
        CHECK(std::string(abort.what()).find("epoch 1") != std::string::npos);
        CHECK(std::string(abort.what()).find("lr") != std::string::npos);
    }
}

TEST_CASE("fit: empty splits are rejected") {
    BiasModel model(4);
    std::vector<data::SampleTriplet> empty, one = {make_sample(4, true, "a")};
    CHECK_THROWS(train::fit(model, empty, one, train::TrainConfig{}));
    CHECK_THROWS(train::fit(model, one, empty, train::TrainConfig{}));
}

TEST_CASE("history csv layout") {
    std::vector<train::EpochRecord> hist = {{1, 2e-3, 0.5, 0.4, 0.7}, {2, 2e-3, 0.3, 0.35, 0.8}};
    const std::string path = "/tmp/vlseg_history_test.csv";
    train::write_history_csv(path, hist);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,lr,train_loss,val_loss,val_dice");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
}
