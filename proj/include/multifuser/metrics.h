#pragma once

#include <cstddef>
#include <vector>

namespace multifuser {

struct EvalResult {
    double top1 = 0.0;
    // Unweighted mean of per-class recall over classes present in the labels.
    double mean1 = 0.0;
    // confusion[true][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    double loss = 0.0;
};

EvalResult compute_metrics(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& predictions,
                           std::size_t num_classes);

}  // namespace multifuser
