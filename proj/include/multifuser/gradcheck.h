#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "multifuser/tensor.h"

namespace multifuser {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct GradcheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Denominator floor: entries whose gradient magnitude is below this are
    // judged by absolute error scaled by the floor.
    double floor = 1e-5;
};

struct GradcheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t entries_checked = 0;
    bool passed = true;
};

using ScalarFn = std::function<Tensor()>;

double relative_error(double analytic, double numeric, double floor);

// Runs f, back-propagates, and compares every parameter entry against
// central differences. Grads on `params` are cleared before and after.
GradcheckReport finite_diff_gradcheck(const ScalarFn& f, const std::vector<NamedTensor>& params,
                                      const GradcheckOptions& options = {});

// Same comparison against caller-supplied analytic gradients (one buffer per
// param). Useful for negative controls.
GradcheckReport compare_gradients(const ScalarFn& f, const std::vector<NamedTensor>& params,
                                  const std::vector<std::vector<double>>& analytic,
                                  const GradcheckOptions& options = {});

}  // namespace multifuser
