#include "multifuser/expert_vit.h"

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

VitBlockParams VitBlockParams::create(std::size_t dim, std::size_t heads, ParamInit& init) {
    if (heads == 0 || dim % heads != 0) throw ConfigError("VitBlockParams: D must be divisible by the head count");
    VitBlockParams p;
    p.heads = heads;
    p.norm = LayerNormParams::create(dim, init);
    p.attention = AttentionParams::create(dim, init);
    p.ffn = FeedForward::create(dim, init);
    return p;
}

void VitBlockParams::collect(ParamList& out, const std::string& prefix) const {
    norm.collect(out, prefix + ".norm");
    attention.collect(out, prefix + ".attn");
    ffn.collect(out, prefix + ".ffn");
}

Tensor vit_block(const Tensor& x, const VitBlockParams& params, Tensor* weights) {
    Tensor normed = params.norm.apply(x);
    Tensor attended = add(multi_head_attention(normed, normed, params.attention, params.heads, weights), x);
    return add(params.ffn.apply(attended), attended);
}

ExpertParams ExpertParams::create(std::size_t modalities, std::size_t dim, std::size_t heads, ParamInit& init) {
    ExpertParams e;
    e.experts.reserve(modalities);
    for (std::size_t m = 0; m < modalities; ++m) e.experts.push_back(VitBlockParams::create(dim, heads, init));
    return e;
}

void ExpertParams::collect(ParamList& out, const std::string& prefix) const {
    for (std::size_t m = 0; m < experts.size(); ++m) experts[m].collect(out, prefix + ".expert" + std::to_string(m));
}

InterFrame modal_route(const InterFrame& frame, const ExpertParams& experts) {
    if (frame.modality >= experts.experts.size()) {
        throw ContractError("modal_route: modality " + std::to_string(frame.modality) + " has no expert (M=" +
                            std::to_string(experts.experts.size()) + ")");
    }
    const std::size_t S = frame.tokens.extent(0), D = frame.tokens.extent(1);
    Tensor sequence = concat({reshape(frame.class_slot, {1, D}), frame.tokens}, 0);
    Tensor out = vit_block(sequence, experts.experts[frame.modality]);
    InterFrame result;
    result.modality = frame.modality;
    result.frame = frame.frame;
    result.class_slot = select(out, 0, 0);
    result.tokens = slice(out, 0, 1, S + 1);
    return result;
}

TokenState inter_stream_layer(const TokenState& x, const ExpertParams& experts) {
    const std::size_t M = x.modalities(), S = x.spatial(), T = x.frames(), D = x.dim();
    if (experts.experts.size() != M) {
        throw ContractError("inter_stream_layer: " + std::to_string(experts.experts.size()) + " experts for M=" +
                            std::to_string(M));
    }
    Tensor view = inter_view(x.patches);
    std::vector<Tensor> frames, class_tokens;
    frames.reserve(M);
    class_tokens.reserve(M);
    for (std::size_t m = 0; m < M; ++m) {
        Tensor cls = expand(reshape(select(x.class_tokens, 0, m), {1, D}), 0, T);  // [T, 1, D]
        Tensor sequence = concat({cls, select(view, 0, m)}, 1);                   // [T, S+1, D]
        Tensor out = vit_block(sequence, experts.experts[m]);
        class_tokens.push_back(mean_axis(select(out, 1, 0), 0));
        frames.push_back(slice(out, 1, 1, S + 1));
    }
    TokenState next = x;
    next.patches = inter_unview(stack(frames, 0));
    next.class_tokens = stack(class_tokens, 0);
    return next;
}

}  // namespace multifuser
