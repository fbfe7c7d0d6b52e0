#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "multifuser/gradcheck.h"
#include "multifuser/tensor.h"

namespace multifuser {

inline constexpr double kLayerNormEps = 1e-6;
inline constexpr double kInitStd = 0.02;

// Seeded source for parameter initialization.
class ParamInit {
  public:
    explicit ParamInit(std::uint64_t seed) : rng_(seed) {}

    Tensor normal(Shape shape, double std = kInitStd);
    Tensor zeros(Shape shape);
    Tensor ones(Shape shape);

  private:
    std::mt19937_64 rng_;
};

using ParamList = std::vector<NamedTensor>;

struct LayerNormParams {
    Tensor gain;
    Tensor bias;

    static LayerNormParams create(std::size_t dim, ParamInit& init);
    Tensor apply(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

// y = x W (+ b). The bias is optional.
struct Linear {
    Tensor weight;
    Tensor bias;

    static Linear create(std::size_t in, std::size_t out, ParamInit& init, bool with_bias = true);
    Tensor apply(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

// Pre-norm position-wise MLP D -> 4D -> D with GELU. apply() returns the
// residual branch only; callers add the skip connection.
struct FeedForward {
    LayerNormParams norm;
    Linear expand;
    Linear contract;

    static FeedForward create(std::size_t dim, ParamInit& init);
    Tensor apply(const Tensor& x) const;
    void collect(ParamList& out, const std::string& prefix) const;
};

struct AttentionParams {
    Linear query;
    Linear key;
    Linear value;
    Linear output;

    static AttentionParams create(std::size_t dim, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// [..., L, D] -> [..., H, L, D/H] and back.
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x);

// Scaled dot-product multi-head attention. queries [..., Lq, D], context
// [..., Lk, D]; returns [..., Lq, D]. When `weights` is non-null it receives
// the per-head attention probabilities [..., H, Lq, Lk].
Tensor multi_head_attention(const Tensor& queries, const Tensor& context, const AttentionParams& params,
                            std::size_t heads, Tensor* weights = nullptr);

}  // namespace multifuser
