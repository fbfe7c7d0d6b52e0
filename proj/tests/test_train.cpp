#include <gtest/gtest.h>

#include <cmath>

#include "multifuser/errors.h"
#include "multifuser/ops.h"
#include "multifuser/train.h"
#include "test_util.h"
#include "train_fixtures.h"

using namespace multifuser;
using namespace multifuser::testing;

TEST(AdamWTest, FirstStepMovesByLearningRateAgainstGradientSign) {
    Tensor p = Tensor::from_data({3}, {1.0, -2.0, 0.5}, true);
    ParamList params{{"p", p}};
    sum(mul(p, Tensor::from_data({3}, {3.0, -0.5, 0.0}))).backward();
    AdamWState state = AdamWState::zeros_like(params);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    adamw_step(params, state, cfg, 1.0);
    // Bias-corrected first step: m_hat / sqrt(v_hat) = sign(g) (up to eps).
    EXPECT_NEAR(p.data()[0], 0.9, 1e-8);
    EXPECT_NEAR(p.data()[1], -1.9, 1e-8);
    EXPECT_EQ(p.data()[2], 0.5);
    EXPECT_FALSE(p.has_grad());
    EXPECT_EQ(state.step, 1u);
}

TEST(AdamWTest, DecoupledDecayWithoutGradient) {
    Tensor p = Tensor::from_data({1}, {2.0}, true);
    ParamList params{{"p", p}};
    AdamWState state = AdamWState::zeros_like(params);
    TrainConfig cfg;
    cfg.learning_rate = 0.5;
    cfg.weight_decay = 0.1;
    adamw_step(params, state, cfg, 1.0);
    EXPECT_EQ(p.data()[0], 2.0 - 0.5 * 0.1 * 2.0);
}

TEST(EpochOrderTest, PermutationDependingOnSeedAndEpoch) {
    auto a = epoch_order(50, 1, 0);
    std::vector<std::size_t> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_EQ(a, epoch_order(50, 1, 0));
    EXPECT_NE(a, epoch_order(50, 1, 1));
    EXPECT_NE(a, epoch_order(50, 2, 0));
}

TEST(TrainTest, ZeroLearningRateLeavesParametersBitIdentical) {
    ModelConfig c = tiny_config();
    MultiFuserModel model(c);
    MultiFuserModel reference = model.clone();
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    train(model, gen_dataset(tiny_data(8)), cfg);
    ParamList a = model.parameters(), b = reference.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(bitwise_equal(a[i].tensor, b[i].tensor)) << a[i].name;
}

TEST(TrainTest, OverfitsSingleSample) {
    ModelConfig c = tiny_config();
    MultiFuserModel model(c);
    TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 100;
    cfg.batch_size = 1;
    TrainReport report = train(model, gen_dataset(tiny_data(1)), cfg);
    for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(report.epochs[e].loss, report.epochs[e - 1].loss);
    EXPECT_LT(report.epochs.back().loss, 0.01);
}

TEST(TrainTest, SameSeedGivesIdenticalLossTrace) {
    auto run = [] {
        MultiFuserModel model(tiny_config());
        TrainConfig cfg;
        cfg.learning_rate = 1e-3;
        cfg.epochs = 3;
        cfg.batch_size = 3;
        cfg.seed = 5;
        std::vector<double> trace;
        for (const EpochStats& s : train(model, gen_dataset(tiny_data(7)), cfg).epochs) trace.push_back(s.loss);
        return trace;
    };
    EXPECT_EQ(run(), run());
}

TEST(TrainTest, ShapeMismatchIsConfigError) {
    MultiFuserModel model(tiny_config());
    DataSpec spec = tiny_data(2);
    spec.modalities = 3;
    TrainConfig cfg;
    EXPECT_THROW(train(model, gen_dataset(spec), cfg), ConfigError);
    cfg.batch_size = 0;
    EXPECT_THROW(Trainer(model, cfg), ConfigError);
}

TEST(TrainTest, DivergenceIsNumericErrorNamingAParameter) {
    MultiFuserModel model(tiny_config());
    model.classifier.bias.mutable_data()[0] = NAN;
    TrainConfig cfg;
    try {
        train(model, gen_dataset(tiny_data(2)), cfg);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("classifier.bias"), std::string::npos) << e.what();
    }
}
