#include <gtest/gtest.h>

#include <algorithm>

#include "multifuser/metrics.h"
#include "multifuser/model.h"
#include "multifuser/synthetic_data.h"
#include "multifuser/train.h"

using namespace multifuser;

TEST(MetricsTest, HandEnumeratedExample) {
    // labels [A, B, B], predictions [A, A, B]
    EvalResult r = compute_metrics({0, 1, 1}, {0, 0, 1}, 2);
    EXPECT_EQ(r.top1, 2.0 / 3.0);
    EXPECT_EQ(r.mean1, 0.75);
    EXPECT_EQ(r.confusion, (std::vector<std::vector<std::size_t>>{{1, 0}, {1, 1}}));
}

TEST(MetricsTest, AllCorrect) {
    EvalResult r = compute_metrics({0, 1, 2, 3, 2}, {0, 1, 2, 3, 2}, 4);
    EXPECT_EQ(r.top1, 1.0);
    EXPECT_EQ(r.mean1, 1.0);
}

TEST(MetricsTest, ConstantPredictorOnBalancedData) {
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < 40; ++i) labels.push_back(i % 4);
    EvalResult r = compute_metrics(labels, std::vector<std::size_t>(40, 2), 4);
    EXPECT_EQ(r.top1, 0.25);
    EXPECT_EQ(r.mean1, 0.25);
}

TEST(MetricsTest, AbsentClassesExcludedFromMeanOne) {
    EvalResult r = compute_metrics({0, 0, 2}, {0, 1, 3}, 4);
    EXPECT_EQ(r.mean1, 0.25);  // (1/2 + 0/1) / 2
}

TEST(MetricsTest, MeanOneInvariantToRebalancing) {
    // Same per-class recalls (1/2 and 1), different class frequencies.
    EvalResult a = compute_metrics({0, 0, 1}, {0, 1, 1}, 2);
    EvalResult b = compute_metrics({0, 0, 0, 0, 1, 1, 1}, {0, 1, 0, 1, 1, 1, 1}, 2);
    EXPECT_EQ(a.mean1, b.mean1);
    EXPECT_NE(a.top1, b.top1);
}

TEST(EvaluateTest, DegeneratePredictorThroughTheModel) {
    ModelConfig c = tiny_config();
    c.fusion = FusionStrategy::kLate;
    MultiFuserModel model(c);
    auto w = model.classifier.weight.mutable_data();
    std::fill(w.begin(), w.end(), 0.0);
    model.classifier.bias.mutable_data()[3] = 1.0;
    DataSpec spec;
    spec.modalities = 2;
    spec.frames = 2;
    spec.height = spec.width = 16;
    spec.samples = 40;
    std::vector<SyntheticClip> data = gen_dataset(spec);
    std::vector<std::size_t> labels;
    for (const SyntheticClip& clip : data) labels.push_back(clip.label);
    EvalResult r = evaluate(model, data);
    const double share = static_cast<double>(std::count(labels.begin(), labels.end(), 3)) / 40.0;
    EXPECT_EQ(r.top1, share);
    EXPECT_EQ(r.mean1, 0.25);
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(r.confusion[t][p], 0u);
}

TEST(EvaluateTest, ArgmaxTakesLowestIndexOnTies) {
    std::vector<double> v{0.1, 0.7, 0.7, -1.0};
    EXPECT_EQ(argmax(v), 1u);
}
