#include <gtest/gtest.h>

#include <algorithm>

#include "multifuser/decomposition.h"
#include "multifuser/errors.h"
#include "multifuser/expert_vit.h"
#include "multifuser/gradcheck.h"
#include "multifuser/gradient_suite.h"
#include "multifuser/ops.h"
#include "test_util.h"

using namespace multifuser;
using namespace multifuser::testing;

namespace {

ExpertParams random_experts(std::size_t M, std::size_t dim, std::uint64_t seed) {
    ParamInit init(seed);
    ExpertParams e = ExpertParams::create(M, dim, 2, init);
    ParamList params;
    e.collect(params, "experts");
    randomize_parameters(params, seed + 1, 0.3);
    return e;
}

TokenState random_state(std::size_t M, std::size_t S, std::size_t T, std::size_t D, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TokenState x;
    x.patches = randn({M, S, T, D}, rng);
    x.class_tokens = randn({M, D}, rng);
    x.grid = {1, S};
    return x;
}

}  // namespace

TEST(VitBlockTest, AttentionRowsSumToOne) {
    ExpertParams e = random_experts(1, 8, 1);
    std::mt19937_64 rng(2);
    Tensor weights;
    vit_block(randn({3, 5, 8}, rng), e.experts[0], &weights);
    ASSERT_EQ(weights.shape(), (Shape{3, 2, 5, 5}));
    for (std::size_t r = 0; r < 30; ++r) {
        double total = 0.0;
        for (std::size_t j = 0; j < 5; ++j) total += weights.data()[r * 5 + j];
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(VitBlockTest, GradientsMatchFiniteDifferences) {
    ExpertParams e = random_experts(1, 8, 3);
    std::mt19937_64 rng(4);
    Tensor x = randn({4, 8}, rng, 1.0, true);
    Tensor w = randn({4, 8}, rng);
    ParamList params{{"x", x}};
    e.collect(params, "vit");
    auto report = finite_diff_gradcheck([&] { return sum(mul(vit_block(x, e.experts[0]), w)); }, params, {});
    EXPECT_TRUE(report.passed) << report.worst_param << " " << report.max_rel_error;
}

TEST(ModalRouteTest, UsesOnlyTheFramesExpert) {
    ExpertParams e = random_experts(3, 8, 5);
    TokenState x = random_state(3, 4, 2, 8, 6);
    InterFrame frame = inter_decompose(x)[2 * 2 + 1];  // m = 2, t = 1
    InterFrame before = modal_route(frame, e);
    // Scrambling the other experts must not change the result.
    ParamList others;
    e.experts[0].collect(others, "e0");
    e.experts[1].collect(others, "e1");
    randomize_parameters(others, 99, 1.0);
    InterFrame after = modal_route(frame, e);
    EXPECT_TRUE(bitwise_equal(before.tokens, after.tokens));
    EXPECT_TRUE(bitwise_equal(before.class_slot, after.class_slot));
    EXPECT_EQ(after.modality, 2u);
    EXPECT_EQ(after.frame, 1u);
}

TEST(ModalRouteTest, OutOfRangeModalityIsContractError) {
    ExpertParams e = random_experts(2, 8, 7);
    InterFrame frame = inter_decompose(random_state(3, 2, 1, 8, 8))[2];
    EXPECT_THROW(modal_route(frame, e), ContractError);
}

TEST(InterStreamTest, MatchesPerFrameRouting) {
    ExpertParams e = random_experts(2, 8, 9);
    TokenState x = random_state(2, 3, 4, 8, 10);
    TokenState y = inter_stream_layer(x, e);
    std::vector<InterFrame> routed;
    for (const InterFrame& f : inter_decompose(x)) routed.push_back(modal_route(f, e));
    TokenState expected = recompose(routed, x);
    EXPECT_LT(max_abs_diff(values(y.patches), values(expected.patches)), 1e-13);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t d = 0; d < 8; ++d) {
            double mean = 0.0;
            for (std::size_t t = 0; t < 4; ++t) mean += routed[m * 4 + t].class_slot.data()[d];
            EXPECT_NEAR(y.class_tokens.at({m, d}), mean / 4.0, 1e-13);
        }
}

TEST(InterStreamTest, FramesAreIndependent) {
    ExpertParams e = random_experts(2, 8, 11);
    TokenState x = random_state(2, 3, 3, 8, 12);
    TokenState y = inter_stream_layer(x, e);
    TokenState x2 = x;
    x2.patches = x.patches.clone();
    // perturb frame (m=1, t=2) only
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t d = 0; d < 8; ++d) x2.patches.mutable_data()[((1 * 3 + s) * 3 + 2) * 8 + d] += 1.0;
    TokenState y2 = inter_stream_layer(x2, e);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t t = 0; t < 3; ++t) {
                const bool touched = m == 1 && t == 2;
                bool same = true;
                for (std::size_t d = 0; d < 8; ++d) same &= y.patches.at({m, s, t, d}) == y2.patches.at({m, s, t, d});
                EXPECT_EQ(same, !touched) << m << " " << s << " " << t;
            }
    EXPECT_TRUE(bitwise_equal(select(y.class_tokens, 0, 0), select(y2.class_tokens, 0, 0)));
}

TEST(InterStreamTest, ExpertCountMustMatchModalities) {
    ExpertParams e = random_experts(2, 8, 13);
    EXPECT_THROW(inter_stream_layer(random_state(3, 2, 2, 8, 14), e), ContractError);
}
