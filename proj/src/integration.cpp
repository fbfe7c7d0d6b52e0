#include "multifuser/integration.h"

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

IntegrationParams IntegrationParams::create(std::size_t dim, std::size_t heads, std::size_t kernel_side,
                                            ParamInit& init) {
    if (kernel_side % 2 == 0) throw ConfigError("IntegrationParams: kernel side must be odd");
    IntegrationParams p;
    p.heads = heads;
    p.kernel = init.normal({kernel_side, kernel_side, kernel_side, dim});
    p.norm = LayerNormParams::create(dim, init);
    p.attention = AttentionParams::create(dim, init);
    p.ffn = FeedForward::create(dim, init);
    return p;
}

void IntegrationParams::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".kernel", kernel});
    norm.collect(out, prefix + ".norm");
    attention.collect(out, prefix + ".attn");
    ffn.collect(out, prefix + ".ffn");
}

Tensor dynamic_pos_embed(const Tensor& fused, const IntegrationParams& params, Grid grid) {
    if (fused.dim() != 4) throw DimensionError("dynamic_pos_embed: expected [M, S, T, D], got " + shape_str(fused.shape()));
    const std::size_t M = fused.extent(0), S = fused.extent(1), T = fused.extent(2), D = fused.extent(3);
    if (grid.size() != S) {
        throw ConfigError("dynamic_pos_embed: grid " + std::to_string(grid.rows) + "x" + std::to_string(grid.cols) +
                          " does not tile S=" + std::to_string(S));
    }
    Tensor volume = reshape(permute(fused, {0, 2, 1, 3}), {M, T, grid.rows, grid.cols, D});
    Tensor conv = permute(reshape(depthwise_conv3d(volume, params.kernel), {M, T, S, D}), {0, 2, 1, 3});
    return add(conv, fused);
}

Tensor synthesizer_update(const Tensor& synthesizer, const Tensor& fused_hat, const IntegrationParams& params,
                          Tensor* weights) {
    if (!synthesizer.defined()) throw ContractError("synthesizer_update: synthesizer token is absent");
    if (fused_hat.dim() != 4) {
        throw DimensionError("synthesizer_update: expected fused tokens [M, S, T, D], got " + shape_str(fused_hat.shape()));
    }
    const std::size_t D = fused_hat.extent(3);
    if (synthesizer.shape() != Shape{D}) {
        throw DimensionError("synthesizer_update: synthesizer " + shape_str(synthesizer.shape()) + " vs D=" +
                             std::to_string(D));
    }
    Tensor h = reshape(synthesizer, {1, D});
    Tensor tokens = reshape(fused_hat, {fused_hat.numel() / D, D});
    Tensor attended = multi_head_attention(params.norm.apply(h), params.norm.apply(tokens), params.attention,
                                           params.heads, weights);
    Tensor h_mid = add(attended, h);
    Tensor h_out = add(params.ffn.apply(h_mid), h_mid);
    return reshape(h_out, {D});
}

}  // namespace multifuser
