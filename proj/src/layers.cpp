#include "multifuser/layers.h"

#include <cmath>

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

Tensor ParamInit::normal(Shape shape, double std) {
    std::normal_distribution<double> dist(0.0, std);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = dist(rng_);
    return Tensor::from_data(std::move(shape), std::move(values), true);
}

Tensor ParamInit::zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }
Tensor ParamInit::ones(Shape shape) { return Tensor::full(std::move(shape), 1.0, true); }

LayerNormParams LayerNormParams::create(std::size_t dim, ParamInit& init) {
    return {init.ones({dim}), init.zeros({dim})};
}

Tensor LayerNormParams::apply(const Tensor& x) const { return layer_norm(x, gain, bias, kLayerNormEps); }

void LayerNormParams::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".gain", gain});
    out.push_back({prefix + ".bias", bias});
}

Linear Linear::create(std::size_t in, std::size_t out, ParamInit& init, bool with_bias) {
    Linear l;
    l.weight = init.normal({in, out});
    if (with_bias) l.bias = init.zeros({out});
    return l;
}

Tensor Linear::apply(const Tensor& x) const {
    Tensor y = matmul(x, weight);
    return bias.defined() ? add_suffix(y, bias) : y;
}

void Linear::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

FeedForward FeedForward::create(std::size_t dim, ParamInit& init) {
    FeedForward f;
    f.norm = LayerNormParams::create(dim, init);
    f.expand = Linear::create(dim, 4 * dim, init);
    f.contract = Linear::create(4 * dim, dim, init);
    return f;
}

Tensor FeedForward::apply(const Tensor& x) const { return contract.apply(gelu(expand.apply(norm.apply(x)))); }

void FeedForward::collect(ParamList& out, const std::string& prefix) const {
    norm.collect(out, prefix + ".norm");
    expand.collect(out, prefix + ".fc1");
    contract.collect(out, prefix + ".fc2");
}

AttentionParams AttentionParams::create(std::size_t dim, ParamInit& init) {
    AttentionParams a;
    a.query = Linear::create(dim, dim, init);
    a.key = Linear::create(dim, dim, init);
    a.value = Linear::create(dim, dim, init);
    a.output = Linear::create(dim, dim, init);
    return a;
}

void AttentionParams::collect(ParamList& out, const std::string& prefix) const {
    query.collect(out, prefix + ".q");
    key.collect(out, prefix + ".k");
    value.collect(out, prefix + ".v");
    output.collect(out, prefix + ".o");
}

Tensor split_heads(const Tensor& x, std::size_t heads) {
    const std::size_t r = x.dim();
    if (r < 2) throw DimensionError("split_heads needs [..., L, D], got " + shape_str(x.shape()));
    const std::size_t d = x.shape()[r - 1];
    if (heads == 0 || d % heads != 0) throw DimensionError("split_heads: D not divisible by head count");
    Shape s = x.shape();
    s.back() = heads;
    s.push_back(d / heads);
    std::vector<std::size_t> axes(r + 1);
    for (std::size_t i = 0; i < r + 1; ++i) axes[i] = i;
    std::swap(axes[r - 1], axes[r - 2]);
    return permute(reshape(x, std::move(s)), axes);
}

Tensor merge_heads(const Tensor& x) {
    const std::size_t r = x.dim();
    if (r < 3) throw DimensionError("merge_heads needs [..., H, L, dh], got " + shape_str(x.shape()));
    std::vector<std::size_t> axes(r);
    for (std::size_t i = 0; i < r; ++i) axes[i] = i;
    std::swap(axes[r - 2], axes[r - 3]);
    Tensor t = permute(x, axes);
    Shape s(t.shape().begin(), t.shape().end() - 1);
    s.back() = x.shape()[r - 3] * x.shape()[r - 1];
    return reshape(t, std::move(s));
}

Tensor multi_head_attention(const Tensor& queries, const Tensor& context, const AttentionParams& params,
                            std::size_t heads, Tensor* weights) {
    Tensor q = split_heads(params.query.apply(queries), heads);
    Tensor k = split_heads(params.key.apply(context), heads);
    Tensor v = split_heads(params.value.apply(context), heads);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.shape().back()));
    Tensor probs = softmax_lastdim(scale(matmul(q, transpose_last(k)), inv_sqrt));
    if (weights) *weights = probs;
    return params.output.apply(merge_heads(matmul(probs, v)));
}

}  // namespace multifuser
