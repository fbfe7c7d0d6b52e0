#include "multifuser/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "multifuser/errors.h"

namespace multifuser {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

std::size_t prod(const Shape& s, std::size_t begin, std::size_t end) {
    std::size_t n = 1;
    for (std::size_t i = begin; i < end; ++i) n *= s[i];
    return n;
}

Shape row_major_strides(const Shape& s) {
    Shape strides(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) strides[i - 1] = strides[i] * s[i];
    return strides;
}

// Visits (out_offset, in_offset) pairs of an axis permutation in output order.
template <typename F>
void for_each_permuted(const Shape& in_shape, const std::vector<std::size_t>& axes, F&& f) {
    const std::size_t rank = in_shape.size();
    const Shape in_strides = row_major_strides(in_shape);
    Shape out_shape(rank), strides(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        out_shape[i] = in_shape[axes[i]];
        strides[i] = in_strides[axes[i]];
    }
    const std::size_t total = shape_numel(in_shape);
    if (rank == 0) {
        f(std::size_t{0}, std::size_t{0});
        return;
    }
    const std::size_t inner = out_shape[rank - 1];
    const std::size_t inner_stride = strides[rank - 1];
    std::vector<std::size_t> counter(rank, 0);
    std::size_t in_off = 0;
    for (std::size_t out = 0; out < total; out += inner) {
        for (std::size_t j = 0; j < inner; ++j) f(out + j, in_off + j * inner_stride);
        // advance the multi-index over all but the innermost axis
        for (std::size_t ax = rank - 1; ax-- > 0;) {
            if (++counter[ax] < out_shape[ax]) {
                in_off += strides[ax];
                break;
            }
            in_off -= strides[ax] * (out_shape[ax] - 1);
            counter[ax] = 0;
        }
    }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
    return make_result(a.shape(), std::move(out), {a, b}, [a, b](const TensorImpl& o) {
        for (const Tensor& t : {a, b}) {
            auto g = grad_sink(t);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
    return make_result(a.shape(), std::move(out), {a, b}, [a, b](const TensorImpl& o) {
        auto ga = grad_sink(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i];
        auto gb = grad_sink(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= o.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    auto x = a.data(), y = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
    return make_result(a.shape(), std::move(out), {a, b}, [a, b](const TensorImpl& o) {
        auto x = a.data(), y = b.data();
        auto ga = grad_sink(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += o.grad[i] * y[i];
        auto gb = grad_sink(b);
        for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += o.grad[i] * x[i];
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v *= factor;
    return make_result(x.shape(), std::move(out), {x}, [x, factor](const TensorImpl& o) {
        auto g = grad_sink(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * o.grad[i];
    });
}

Tensor add_suffix(const Tensor& x, const Tensor& y) {
    const Shape& xs = x.shape();
    const Shape& ys = y.shape();
    if (ys.size() > xs.size() || !std::equal(ys.begin(), ys.end(), xs.end() - ys.size())) {
        throw DimensionError("add_suffix: " + shape_str(ys) + " is not a trailing shape of " + shape_str(xs));
    }
    const std::size_t inner = y.numel();
    std::vector<double> out(x.data().begin(), x.data().end());
    auto yd = y.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += yd[i % inner];
    return make_result(xs, std::move(out), {x, y}, [x, y, inner](const TensorImpl& o) {
        auto gx = grad_sink(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i];
        auto gy = grad_sink(y);
        if (!gy.empty()) {
            for (std::size_t i = 0; i < o.grad.size(); ++i) gy[i % inner] += o.grad[i];
        }
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.dim() < 2 || b.dim() < 2) {
        throw DimensionError("matmul needs rank >= 2 operands, got " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t p = a.shape()[a.dim() - 2];
    const std::size_t q = a.shape()[a.dim() - 1];
    const std::size_t r = b.shape()[b.dim() - 1];
    if (b.shape()[b.dim() - 2] != q) {
        throw DimensionError("matmul: inner extents differ for " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }

    if (b.dim() == 2) {
        // Fold every leading axis of a into the row count: one GEMM.
        const auto rows = static_cast<Eigen::Index>(a.numel() / q);
        Shape out_shape = a.shape();
        out_shape.back() = r;
        std::vector<double> out(static_cast<std::size_t>(rows) * r);
        MutMap(out.data(), rows, r).noalias() = ConstMap(a.data().data(), rows, q) * ConstMap(b.data().data(), q, r);
        return make_result(std::move(out_shape), std::move(out), {a, b}, [a, b, rows, q, r](const TensorImpl& o) {
            ConstMap dc(o.grad.data(), rows, r);
            if (auto ga = grad_sink(a); !ga.empty()) {
                MutMap(ga.data(), rows, q).noalias() += dc * ConstMap(b.data().data(), q, r).transpose();
            }
            if (auto gb = grad_sink(b); !gb.empty()) {
                MutMap(gb.data(), q, r).noalias() += ConstMap(a.data().data(), rows, q).transpose() * dc;
            }
        });
    }

    // General batched case with numpy-style broadcasting of leading extents.
    const Shape a_batch(a.shape().begin(), a.shape().end() - 2);
    const Shape b_batch(b.shape().begin(), b.shape().end() - 2);
    const std::size_t rank = std::max(a_batch.size(), b_batch.size());
    Shape out_batch(rank), a_str(rank, 0), b_str(rank, 0);
    {
        const Shape as = row_major_strides(a_batch), bs = row_major_strides(b_batch);
        for (std::size_t i = 0; i < rank; ++i) {
            const std::ptrdiff_t ai = static_cast<std::ptrdiff_t>(i + a_batch.size()) - static_cast<std::ptrdiff_t>(rank);
            const std::ptrdiff_t bi = static_cast<std::ptrdiff_t>(i + b_batch.size()) - static_cast<std::ptrdiff_t>(rank);
            const std::size_t ae = ai >= 0 ? a_batch[ai] : 1;
            const std::size_t be = bi >= 0 ? b_batch[bi] : 1;
            if (ae != be && ae != 1 && be != 1) {
                throw DimensionError("matmul: batch extents not broadcastable for " + shape_str(a.shape()) + " x " +
                                     shape_str(b.shape()));
            }
            out_batch[i] = std::max(ae, be);
            if (ai >= 0 && ae != 1) a_str[i] = as[ai];
            if (bi >= 0 && be != 1) b_str[i] = bs[bi];
        }
    }
    const std::size_t batches = shape_numel(out_batch);
    std::vector<std::size_t> a_off(batches), b_off(batches);
    {
        std::vector<std::size_t> idx(rank, 0);
        for (std::size_t n = 0; n < batches; ++n) {
            std::size_t ao = 0, bo = 0;
            for (std::size_t i = 0; i < rank; ++i) {
                ao += idx[i] * a_str[i];
                bo += idx[i] * b_str[i];
            }
            a_off[n] = ao * p * q;
            b_off[n] = bo * q * r;
            for (std::size_t i = rank; i-- > 0;) {
                if (++idx[i] < out_batch[i]) break;
                idx[i] = 0;
            }
        }
    }
    Shape out_shape = out_batch;
    out_shape.push_back(p);
    out_shape.push_back(r);
    std::vector<double> out(batches * p * r);
    const auto P = static_cast<Eigen::Index>(p), Q = static_cast<Eigen::Index>(q), R = static_cast<Eigen::Index>(r);
    for (std::size_t n = 0; n < batches; ++n) {
        MutMap(out.data() + n * p * r, P, R).noalias() =
            ConstMap(a.data().data() + a_off[n], P, Q) * ConstMap(b.data().data() + b_off[n], Q, R);
    }
    return make_result(std::move(out_shape), std::move(out), {a, b},
                       [a, b, a_off, b_off, P, Q, R](const TensorImpl& o) {
                           auto ga = grad_sink(a);
                           auto gb = grad_sink(b);
                           for (std::size_t n = 0; n < a_off.size(); ++n) {
                               ConstMap dc(o.grad.data() + n * P * R, P, R);
                               if (!ga.empty()) {
                                   MutMap(ga.data() + a_off[n], P, Q).noalias() +=
                                       dc * ConstMap(b.data().data() + b_off[n], Q, R).transpose();
                               }
                               if (!gb.empty()) {
                                   MutMap(gb.data() + b_off[n], Q, R).noalias() +=
                                       ConstMap(a.data().data() + a_off[n], P, Q).transpose() * dc;
                               }
                           }
                       });
}

namespace {

// Summing in ascending order makes the result depend only on the multiset of
// terms, so reordering the inputs cannot change a single bit. Sorts in place.
double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
}

}  // namespace

Tensor softmax_lastdim(const Tensor& x) {
    if (x.dim() == 0) throw DimensionError("softmax_lastdim needs rank >= 1");
    const std::size_t n = x.shape().back();
    const std::size_t rows = x.numel() / n;
    auto in = x.data();
    std::vector<double> out(x.numel()), scratch;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = in.data() + r * n;
        double* dst = out.data() + r * n;
        double mx = src[0];
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(src[j])) throw NumericError("softmax_lastdim: non-finite input");
            mx = std::max(mx, src[j]);
        }
        for (std::size_t j = 0; j < n; ++j) dst[j] = std::exp(src[j] - mx);
        scratch.assign(dst, dst + n);
        const double total = sorted_sum(scratch);
        for (std::size_t j = 0; j < n; ++j) dst[j] /= total;
    }
    return make_result(x.shape(), std::move(out), {x}, [x, n, rows](const TensorImpl& o) {
        auto g = grad_sink(x);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = o.data.data() + r * n;
            const double* dy = o.grad.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
            for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
        }
    });
}

Tensor matmul_sorted(const Tensor& a, const Tensor& b) {
    if (a.dim() < 2 || a.dim() != b.dim() ||
        !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin()) ||
        a.shape().back() != b.shape()[b.dim() - 2]) {
        throw DimensionError("matmul_sorted: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    const std::size_t p = a.shape()[a.dim() - 2], q = a.shape().back(), r = b.shape().back();
    const std::size_t batch = a.numel() / (p * q);
    Shape shape = a.shape();
    shape.back() = r;
    auto da = a.data(), db = b.data();
    std::vector<double> out(batch * p * r);
    std::vector<double> terms(q);
    for (std::size_t n = 0; n < batch; ++n) {
        const double* A = da.data() + n * p * q;
        const double* B = db.data() + n * q * r;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                for (std::size_t k = 0; k < q; ++k) terms[k] = A[i * q + k] * B[k * r + j];
                out[(n * p + i) * r + j] = sorted_sum(terms);
            }
    }
    return make_result(std::move(shape), std::move(out), {a, b}, [a, b, batch, p, q, r](const TensorImpl& o) {
        auto ga = grad_sink(a);
        auto gb = grad_sink(b);
        auto da = a.data(), db = b.data();
        for (std::size_t n = 0; n < batch; ++n) {
            const double* A = da.data() + n * p * q;
            const double* B = db.data() + n * q * r;
            const double* G = o.grad.data() + n * p * r;
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < r; ++j) {
                    const double g = G[i * r + j];
                    for (std::size_t k = 0; k < q; ++k) {
                        if (!ga.empty()) ga[n * p * q + i * q + k] += g * B[k * r + j];
                        if (!gb.empty()) gb[n * q * r + k * r + j] += A[i * q + k] * g;
                    }
                }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (x.dim() == 0) throw DimensionError("layer_norm needs rank >= 1");
    const std::size_t d = x.shape().back();
    if (gain.shape() != Shape{d} || bias.shape() != Shape{d}) {
        throw DimensionError("layer_norm: gain " + shape_str(gain.shape()) + " / bias " + shape_str(bias.shape()) +
                             " do not match last extent of " + shape_str(x.shape()));
    }
    const std::size_t rows = x.numel() / d;
    auto in = x.data();
    auto g = gain.data(), b = bias.data();
    std::vector<double> out(x.numel()), xhat(x.numel()), rstd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = in.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += src[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (src[j] - mean) * (src[j] - mean);
        var /= static_cast<double>(d);
        // zero-variance slices with eps == 0 normalize to zero
        const double denom = std::sqrt(var + eps);
        rstd[r] = denom > 0.0 ? 1.0 / denom : 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            xhat[r * d + j] = (src[j] - mean) * rstd[r];
            out[r * d + j] = xhat[r * d + j] * g[j] + b[j];
        }
    }
    return make_result(x.shape(), std::move(out), {x, gain, bias},
                       [x, gain, bias, d, rows, xhat = std::move(xhat), rstd = std::move(rstd)](const TensorImpl& o) {
                           auto gx = grad_sink(x);
                           auto gg = grad_sink(gain);
                           auto gb = grad_sink(bias);
                           auto gd = gain.data();
                           std::vector<double> dxhat(d);
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* dy = o.grad.data() + r * d;
                               const double* xh = xhat.data() + r * d;
                               double m1 = 0.0, m2 = 0.0;
                               for (std::size_t j = 0; j < d; ++j) {
                                   dxhat[j] = dy[j] * gd[j];
                                   m1 += dxhat[j];
                                   m2 += dxhat[j] * xh[j];
                                   if (!gg.empty()) gg[j] += dy[j] * xh[j];
                                   if (!gb.empty()) gb[j] += dy[j];
                               }
                               if (gx.empty()) continue;
                               m1 /= static_cast<double>(d);
                               m2 /= static_cast<double>(d);
                               for (std::size_t j = 0; j < d; ++j) {
                                   gx[r * d + j] += rstd[r] * (dxhat[j] - m1 - xh[j] * m2);
                               }
                           }
                       });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.numel());
    auto in = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = in[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
    }
    return make_result(x.shape(), std::move(out), {x}, [x](const TensorImpl& o) {
        auto g = grad_sink(x);
        auto in = x.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = in[i];
            const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            const double dth = (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            g[i] += o.grad[i] * (0.5 * (1.0 + th) + 0.5 * v * dth);
        }
    });
}

Tensor depthwise_conv3d(const Tensor& x, const Tensor& kernel) {
    if (kernel.dim() != 4) throw DimensionError("depthwise_conv3d: kernel must be [kt, kh, kw, D], got " + shape_str(kernel.shape()));
    if (x.dim() < 4) throw DimensionError("depthwise_conv3d: input must be [..., T, Hp, Wp, D], got " + shape_str(x.shape()));
    const Shape& ks = kernel.shape();
    for (std::size_t i = 0; i < 3; ++i) {
        if (ks[i] % 2 == 0) throw ConfigError("depthwise_conv3d: kernel extents must be odd, got " + shape_str(ks));
    }
    const std::size_t r = x.dim();
    const std::size_t T = x.shape()[r - 4], H = x.shape()[r - 3], W = x.shape()[r - 2], D = x.shape()[r - 1];
    if (ks[3] != D) {
        throw DimensionError("depthwise_conv3d: kernel channels " + shape_str(ks) + " vs input " + shape_str(x.shape()));
    }
    const std::size_t batches = x.numel() / (T * H * W * D);
    const std::size_t kt = ks[0], kh = ks[1], kw = ks[2];
    const auto pt = static_cast<std::ptrdiff_t>(kt / 2), ph = static_cast<std::ptrdiff_t>(kh / 2),
               pw = static_cast<std::ptrdiff_t>(kw / 2);

    // Calls f(out_offset, in_offset, kernel_offset) for every in-bounds tap;
    // each offset addresses a run of D channels.
    auto taps = [=](auto&& f) {
        for (std::size_t n = 0; n < batches; ++n) {
            const std::size_t base = n * T * H * W * D;
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t h = 0; h < H; ++h)
                    for (std::size_t w = 0; w < W; ++w) {
                        const std::size_t out_off = base + ((t * H + h) * W + w) * D;
                        for (std::size_t a = 0; a < kt; ++a) {
                            const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + a) - pt;
                            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(T)) continue;
                            for (std::size_t b = 0; b < kh; ++b) {
                                const std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(h + b) - ph;
                                if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(H)) continue;
                                for (std::size_t c = 0; c < kw; ++c) {
                                    const std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(w + c) - pw;
                                    if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(W)) continue;
                                    const std::size_t in_off =
                                        base + ((static_cast<std::size_t>(ti) * H + static_cast<std::size_t>(hi)) * W +
                                                static_cast<std::size_t>(wi)) *
                                                   D;
                                    f(out_off, in_off, ((a * kh + b) * kw + c) * D);
                                }
                            }
                        }
                    }
        }
    };

    std::vector<double> out(x.numel(), 0.0);
    const double* in = x.data().data();
    const double* k = kernel.data().data();
    taps([&](std::size_t o, std::size_t i, std::size_t kk) {
        for (std::size_t d = 0; d < D; ++d) out[o + d] += in[i + d] * k[kk + d];
    });
    return make_result(x.shape(), std::move(out), {x, kernel}, [x, kernel, taps, D](const TensorImpl& res) {
        auto gx = grad_sink(x);
        auto gk = grad_sink(kernel);
        const double* in = x.data().data();
        const double* k = kernel.data().data();
        const double* dy = res.grad.data();
        taps([&](std::size_t o, std::size_t i, std::size_t kk) {
            for (std::size_t d = 0; d < D; ++d) {
                if (!gx.empty()) gx[i + d] += dy[o + d] * k[kk + d];
                if (!gk.empty()) gk[kk + d] += dy[o + d] * in[i + d];
            }
        });
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(shape), std::move(out), {x}, [x](const TensorImpl& o) {
        auto g = grad_sink(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
    const std::size_t rank = x.dim();
    if (axes.size() != rank) throw DimensionError("permute: axis count mismatch for " + shape_str(x.shape()));
    std::vector<bool> seen(rank, false);
    for (std::size_t a : axes) {
        if (a >= rank || seen[a]) throw DimensionError("permute: invalid axis order for " + shape_str(x.shape()));
        seen[a] = true;
    }
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.shape()[axes[i]];
    std::vector<double> out(x.numel());
    auto in = x.data();
    for_each_permuted(x.shape(), axes, [&](std::size_t o, std::size_t i) { out[o] = in[i]; });
    return make_result(std::move(out_shape), std::move(out), {x}, [x, axes](const TensorImpl& o) {
        auto g = grad_sink(x);
        for_each_permuted(x.shape(), axes, [&](std::size_t oo, std::size_t i) { g[i] += o.grad[oo]; });
    });
}

Tensor transpose_last(const Tensor& x) {
    if (x.dim() < 2) throw DimensionError("transpose_last needs rank >= 2");
    std::vector<std::size_t> axes(x.dim());
    std::iota(axes.begin(), axes.end(), 0);
    std::swap(axes[x.dim() - 1], axes[x.dim() - 2]);
    return permute(x, axes);
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat of zero tensors");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) throw DimensionError("concat: " + shape_str(s) + " incompatible with " + shape_str(first));
        out_shape[axis] += s[axis];
    }
    const std::size_t outer = prod(first, 0, axis);
    const std::size_t inner = prod(first, axis + 1, first.size());
    const std::size_t row = out_shape[axis] * inner;
    std::vector<double> out(outer * row);
    std::size_t col = 0;
    for (const Tensor& p : parts) {
        const std::size_t chunk = p.shape()[axis] * inner;
        auto src = p.data();
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy_n(src.begin() + o * chunk, chunk, out.begin() + o * row + col);
        }
        col += chunk;
    }
    return make_result(std::move(out_shape), std::move(out), parts, [parts, axis, outer, inner, row](const TensorImpl& res) {
        std::size_t col = 0;
        for (const Tensor& p : parts) {
            const std::size_t chunk = p.shape()[axis] * inner;
            auto g = grad_sink(p);
            if (!g.empty()) {
                for (std::size_t o = 0; o < outer; ++o)
                    for (std::size_t j = 0; j < chunk; ++j) g[o * chunk + j] += res.grad[o * row + col + j];
            }
            col += chunk;
        }
    });
}

Tensor stack(const std::vector<Tensor>& parts, std::size_t axis) {
    std::vector<Tensor> expanded;
    expanded.reserve(parts.size());
    for (const Tensor& p : parts) {
        if (axis > p.dim()) throw DimensionError("stack: axis out of range for " + shape_str(p.shape()));
        Shape s = p.shape();
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(axis), 1);
        expanded.push_back(reshape(p, std::move(s)));
    }
    return concat(expanded, axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    if (axis >= x.dim() || begin >= end || end > x.shape()[axis]) {
        throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                             std::to_string(axis) + " of " + shape_str(x.shape()));
    }
    const Shape& s = x.shape();
    const std::size_t outer = prod(s, 0, axis);
    const std::size_t inner = prod(s, axis + 1, s.size());
    const std::size_t row = s[axis] * inner;
    const std::size_t chunk = (end - begin) * inner;
    const std::size_t col = begin * inner;
    Shape out_shape = s;
    out_shape[axis] = end - begin;
    std::vector<double> out(outer * chunk);
    auto src = x.data();
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(src.begin() + o * row + col, chunk, out.begin() + o * chunk);
    return make_result(std::move(out_shape), std::move(out), {x}, [x, outer, row, chunk, col](const TensorImpl& res) {
        auto g = grad_sink(x);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t j = 0; j < chunk; ++j) g[o * row + col + j] += res.grad[o * chunk + j];
    });
}

Tensor select(const Tensor& x, std::size_t axis, std::size_t i) {
    Tensor s = slice(x, axis, i, i + 1);
    Shape shape = x.shape();
    shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    return reshape(s, std::move(shape));
}

Tensor expand(const Tensor& x, std::size_t axis, std::size_t count) {
    if (axis > x.dim() || count == 0) throw DimensionError("expand: invalid axis/count for " + shape_str(x.shape()));
    const Shape& s = x.shape();
    const std::size_t outer = prod(s, 0, axis);
    const std::size_t inner = prod(s, axis, s.size());
    Shape out_shape = s;
    out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
    std::vector<double> out(outer * count * inner);
    auto src = x.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t c = 0; c < count; ++c)
            std::copy_n(src.begin() + o * inner, inner, out.begin() + (o * count + c) * inner);
    return make_result(std::move(out_shape), std::move(out), {x}, [x, outer, count, inner](const TensorImpl& res) {
        auto g = grad_sink(x);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t c = 0; c < count; ++c)
                for (std::size_t j = 0; j < inner; ++j) g[o * inner + j] += res.grad[(o * count + c) * inner + j];
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    return make_result({}, {total}, {x}, [x](const TensorImpl& o) {
        auto g = grad_sink(x);
        for (double& v : g) v += o.grad[0];
    });
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
    if (axis >= x.dim()) throw DimensionError("mean_axis: axis out of range for " + shape_str(x.shape()));
    const Shape& s = x.shape();
    const std::size_t outer = prod(s, 0, axis);
    const std::size_t n = s[axis];
    const std::size_t inner = prod(s, axis + 1, s.size());
    Shape out_shape = s;
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<double> out(outer * inner, 0.0);
    auto src = x.data();
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < inner; ++j) out[o * inner + j] += src[(o * n + k) * inner + j];
    const double inv = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= inv;
    return make_result(std::move(out_shape), std::move(out), {x}, [x, outer, n, inner, inv](const TensorImpl& res) {
        auto g = grad_sink(x);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < inner; ++j) g[(o * n + k) * inner + j] += inv * res.grad[o * inner + j];
    });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
    if (logits.dim() != 1) throw DimensionError("cross_entropy expects a logit vector, got " + shape_str(logits.shape()));
    const std::size_t n = logits.numel();
    if (label >= n) throw ContractError("cross_entropy: label " + std::to_string(label) + " out of range");
    auto z = logits.data();
    const double mx = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - mx);
    const double lse = mx + std::log(total);
    return make_result({}, {lse - z[label]}, {logits}, [logits, label, lse](const TensorImpl& o) {
        auto g = grad_sink(logits);
        auto z = logits.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += o.grad[0] * (std::exp(z[i] - lse) - (i == label ? 1.0 : 0.0));
        }
    });
}

}  // namespace multifuser
