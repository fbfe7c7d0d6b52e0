#pragma once

#include <random>
#include <vector>

#include "multifuser/tensor.h"

namespace multifuser::testing {

inline Tensor randn(Shape shape, std::mt19937_64& rng, double std = 1.0, bool requires_grad = false) {
    std::normal_distribution<double> dist(0.0, std);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

inline Tensor uniform(Shape shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v));
}

inline std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && values(a) == values(b);
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace multifuser::testing
