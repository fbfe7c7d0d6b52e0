#pragma once

#include <vector>

#include "multifuser/decomposition.h"
#include "multifuser/layers.h"

namespace multifuser {

// One pre-norm ViT encoder block.
struct VitBlockParams {
    std::size_t heads = 1;
    LayerNormParams norm;
    AttentionParams attention;
    FeedForward ffn;

    static VitBlockParams create(std::size_t dim, std::size_t heads, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// x [..., L, D] -> [..., L, D]. `weights` receives the self-attention
// probabilities [..., H, L, L] when non-null.
Tensor vit_block(const Tensor& x, const VitBlockParams& params, Tensor* weights = nullptr);

// One block parameter set per modality for a single layer.
struct ExpertParams {
    std::vector<VitBlockParams> experts;

    static ExpertParams create(std::size_t modalities, std::size_t dim, std::size_t heads, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// Runs the frame (class slot prepended as row 0) through the expert of its
// modality. The updated class slot is row 0 of the block output.
InterFrame modal_route(const InterFrame& frame, const ExpertParams& experts);

// Routes every inter frame through its modality expert and reassembles the
// state. The next class token of modality m is the mean over its T updated
// class slots. Frames of one modality run as one batch.
TokenState inter_stream_layer(const TokenState& x, const ExpertParams& experts);

}  // namespace multifuser
