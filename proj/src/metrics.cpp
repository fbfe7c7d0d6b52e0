#include "multifuser/metrics.h"

#include "multifuser/errors.h"

namespace multifuser {

EvalResult compute_metrics(const std::vector<std::size_t>& labels, const std::vector<std::size_t>& predictions,
                           std::size_t num_classes) {
    if (labels.empty()) throw ContractError("compute_metrics: empty evaluation set");
    if (labels.size() != predictions.size()) throw ContractError("compute_metrics: label/prediction count mismatch");
    EvalResult r;
    r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes || predictions[i] >= num_classes) {
            throw ContractError("compute_metrics: class index out of range");
        }
        ++r.confusion[labels[i]][predictions[i]];
        if (labels[i] == predictions[i]) ++correct;
    }
    r.top1 = static_cast<double>(correct) / static_cast<double>(labels.size());
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::size_t row = 0;
        for (std::size_t n : r.confusion[c]) row += n;
        if (row == 0) continue;
        recall_sum += static_cast<double>(r.confusion[c][c]) / static_cast<double>(row);
        ++present;
    }
    r.mean1 = recall_sum / static_cast<double>(present);
    return r;
}

}  // namespace multifuser
