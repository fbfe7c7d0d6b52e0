#pragma once

#include "multifuser/layers.h"

namespace multifuser {

// Patch-wise adaptive fusion over groups of modality tokens. One parameter
// set per layer, shared by all S*T groups of that layer. Head n owns column
// block n of the query/key/value matrices.
struct PafParams {
    std::size_t heads = 1;
    LayerNormParams norm;
    Linear query;  // [D, D], no bias
    Linear key;
    Linear value;
    Linear fusion;  // U [D, D]
    FeedForward ffn;

    static PafParams create(std::size_t dim, std::size_t heads, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// Row-stochastic affinity among the M tokens of each group for every head:
// softmax over t of Q_n(B_m) . K_n(B_t), unscaled. [..., M, D] -> [..., H, M, M].
Tensor interrelation_all(const Tensor& groups, const PafParams& params);
// Single group [M, D], single head -> [M, M].
Tensor interrelation(const Tensor& group, const PafParams& params, std::size_t head);

// Concat over heads of R_n V_n(B), right-multiplied by U. [..., M, D].
Tensor adaptive_fuse(const Tensor& groups, const PafParams& params);

// y = fuse(Norm(B)) + B; z = FFN(Norm(y)) + y. Accepts any leading batch of
// groups [..., M, D].
Tensor paf_block(const Tensor& groups, const PafParams& params);

}  // namespace multifuser
