#pragma once

#include <cstddef>
#include <vector>

#include "multifuser/tensor.h"

namespace multifuser {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// x + y where y's shape equals the trailing dims of x (bias / table broadcast).
Tensor add_suffix(const Tensor& x, const Tensor& y);

// Contracted product over the last axis of a and the second-to-last of b.
// Leading batch extents broadcast numpy-style; a 2-D b is applied to every
// row of a.
Tensor matmul(const Tensor& a, const Tensor& b);

// Same product for operands with identical batch extents, but every output
// entry sums its q products in ascending order. Permuting the contraction
// axis of both operands therefore leaves the result bitwise unchanged.
Tensor matmul_sorted(const Tensor& a, const Tensor& b);

// Normalizer summed in ascending order (invariant to reordering the row).
Tensor softmax_lastdim(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
// tanh approximation
Tensor gelu(const Tensor& x);

// x [..., T, Hp, Wp, D], kernel [kt, kh, kw, D] with odd extents. Per-channel
// cross-correlation with zero padding (k-1)/2, grid shape preserved.
Tensor depthwise_conv3d(const Tensor& x, const Tensor& kernel);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
// Swap the last two axes.
Tensor transpose_last(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor stack(const std::vector<Tensor>& parts, std::size_t axis);
// Half-open range [begin, end) along `axis`; the axis is kept.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
// Take index `i` along `axis`, dropping the axis.
Tensor select(const Tensor& x, std::size_t axis, std::size_t i);
// Replicate along a new axis inserted at `axis`.
Tensor expand(const Tensor& x, std::size_t axis, std::size_t count);

Tensor sum(const Tensor& x);
Tensor mean_axis(const Tensor& x, std::size_t axis);

// Softmax cross-entropy of one logit vector against a class index.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

}  // namespace multifuser
