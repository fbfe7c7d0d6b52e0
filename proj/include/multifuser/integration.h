#pragma once

#include "multifuser/layers.h"
#include "multifuser/patch_embedding.h"

namespace multifuser {

// Per synthesizer-bearing layer: depthwise positional kernel, one layer norm
// shared by the synthesizer query and the fused tokens, cross attention, and
// a pre-norm FFN.
struct IntegrationParams {
    std::size_t heads = 1;
    Tensor kernel;  // [k, k, k, D]
    LayerNormParams norm;
    AttentionParams attention;
    FeedForward ffn;

    static IntegrationParams create(std::size_t dim, std::size_t heads, std::size_t kernel_side, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// X^ = DWConv(X') + X', each modality convolved over its own (T, Hp, Wp)
// grid with D depthwise channels.
Tensor dynamic_pos_embed(const Tensor& fused, const IntegrationParams& params, Grid grid);

// h' = MHCA(Norm(h), Norm(X^)) + h; returns FFN(Norm(h')) + h'.
// `weights`, when given, receives the attention [H, 1, M*S*T].
Tensor synthesizer_update(const Tensor& synthesizer, const Tensor& fused_hat, const IntegrationParams& params,
                          Tensor* weights = nullptr);

}  // namespace multifuser
