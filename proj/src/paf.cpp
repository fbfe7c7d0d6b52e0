#include "multifuser/paf.h"

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

PafParams PafParams::create(std::size_t dim, std::size_t heads, ParamInit& init) {
    if (heads == 0 || dim % heads != 0) throw ConfigError("PafParams: D must be divisible by the head count");
    PafParams p;
    p.heads = heads;
    p.norm = LayerNormParams::create(dim, init);
    p.query = Linear::create(dim, dim, init, false);
    p.key = Linear::create(dim, dim, init, false);
    p.value = Linear::create(dim, dim, init, false);
    p.fusion = Linear::create(dim, dim, init, false);
    p.ffn = FeedForward::create(dim, init);
    return p;
}

void PafParams::collect(ParamList& out, const std::string& prefix) const {
    norm.collect(out, prefix + ".norm");
    query.collect(out, prefix + ".q");
    key.collect(out, prefix + ".k");
    value.collect(out, prefix + ".v");
    fusion.collect(out, prefix + ".u");
    ffn.collect(out, prefix + ".ffn");
}

Tensor interrelation_all(const Tensor& groups, const PafParams& params) {
    Tensor q = split_heads(params.query.apply(groups), params.heads);
    Tensor k = split_heads(params.key.apply(groups), params.heads);
    return softmax_lastdim(matmul(q, transpose_last(k)));
}

Tensor interrelation(const Tensor& group, const PafParams& params, std::size_t head) {
    if (group.dim() != 2) throw DimensionError("interrelation: expected one group [M, D], got " + shape_str(group.shape()));
    if (head >= params.heads) throw ContractError("interrelation: head index out of range");
    return select(interrelation_all(group, params), 0, head);
}

Tensor adaptive_fuse(const Tensor& groups, const PafParams& params) {
    Tensor relation = interrelation_all(groups, params);
    Tensor v = split_heads(params.value.apply(groups), params.heads);
    return params.fusion.apply(merge_heads(matmul_sorted(relation, v)));
}

Tensor paf_block(const Tensor& groups, const PafParams& params) {
    Tensor fused = add(adaptive_fuse(params.norm.apply(groups), params), groups);
    return add(params.ffn.apply(fused), fused);
}

}  // namespace multifuser
