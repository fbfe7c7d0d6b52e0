#pragma once

#include <random>

#include "multifuser/gradient_suite.h"
#include "multifuser/paf.h"
#include "oracles.h"
#include "test_util.h"

namespace multifuser::testing {

inline oracle::Matrix as_matrix(const Tensor& t) {
    return oracle::from_flat(values(t), t.extent(0), t.extent(1));
}

inline oracle::FfnWeights as_oracle(const FeedForward& f) {
    return {values(f.norm.gain), values(f.norm.bias),  as_matrix(f.expand.weight),
            values(f.expand.bias), as_matrix(f.contract.weight), values(f.contract.bias)};
}

inline oracle::PafWeights as_oracle(const PafParams& p) {
    return {p.heads,
            values(p.norm.gain),
            values(p.norm.bias),
            as_matrix(p.query.weight),
            as_matrix(p.key.weight),
            as_matrix(p.value.weight),
            as_matrix(p.fusion.weight),
            as_oracle(p.ffn)};
}

struct PafOracleResult {
    double max_abs_error = 0.0;
    std::size_t cases = 0;
};

// Draws `cases` random (M, D, heads, params, group) tuples with M <= 4 and
// D <= 16 and compares paf_block against the nested-loop oracle.
inline PafOracleResult compare_paf_with_oracle(std::size_t cases, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PafOracleResult result;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t M = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        const std::size_t heads = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
        const std::size_t dh = std::uniform_int_distribution<std::size_t>(1, 16 / heads)(rng);
        const std::size_t D = heads * dh;
        ParamInit init(rng());
        PafParams p = PafParams::create(D, heads, init);
        ParamList params;
        p.collect(params, "paf");
        randomize_parameters(params, rng(), 0.5);
        Tensor group = randn({M, D}, rng);
        std::vector<double> fast = values(paf_block(group, p));
        oracle::Matrix slow = oracle::paf_block(as_matrix(group), as_oracle(p), kLayerNormEps);
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t i = 0; i < D; ++i)
                result.max_abs_error = std::max(result.max_abs_error, std::abs(fast[m * D + i] - slow[m][i]));
        ++result.cases;
    }
    return result;
}

}  // namespace multifuser::testing
