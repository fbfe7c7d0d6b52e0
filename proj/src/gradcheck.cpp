#include "multifuser/gradcheck.h"

#include <algorithm>
#include <cmath>

#include "multifuser/errors.h"

namespace multifuser {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const ScalarFn& f) {
    NoGradGuard guard;
    Tensor out = f();
    if (out.numel() != 1) throw ContractError("gradcheck: function must return a scalar");
    return out.item();
}

}  // namespace

GradcheckReport compare_gradients(const ScalarFn& f, const std::vector<NamedTensor>& params,
                                  const std::vector<std::vector<double>>& analytic,
                                  const GradcheckOptions& options) {
    if (options.step <= 0.0) throw ContractError("gradcheck: step must be positive");
    if (analytic.size() != params.size()) throw ContractError("gradcheck: one analytic buffer per parameter");

    const double base1 = evaluate(f);
    const double base2 = evaluate(f);
    if (base1 != base2) throw ContractError("gradcheck: function is not deterministic");

    GradcheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor t = params[p].tensor;
        auto values = t.mutable_data();
        if (analytic[p].size() != values.size()) {
            throw ContractError("gradcheck: analytic buffer size mismatch for " + params[p].name);
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + options.step;
            const double plus = evaluate(f);
            values[i] = saved - options.step;
            const double minus = evaluate(f);
            values[i] = saved;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double err = relative_error(analytic[p][i], numeric, options.floor);
            ++report.entries_checked;
            if (err > report.max_rel_error || report.entries_checked == 1) {
                report.max_rel_error = err;
                report.worst_param = params[p].name;
                report.worst_index = i;
                report.analytic_at_worst = analytic[p][i];
                report.numeric_at_worst = numeric;
            }
        }
    }
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

GradcheckReport finite_diff_gradcheck(const ScalarFn& f, const std::vector<NamedTensor>& params,
                                      const GradcheckOptions& options) {
    for (const NamedTensor& p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
        if (!t.requires_grad()) throw ContractError("gradcheck: parameter " + p.name + " does not require grad");
    }
    Tensor loss = f();
    loss.backward();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const NamedTensor& p : params) {
        Tensor t = p.tensor;
        if (t.has_grad()) {
            analytic.emplace_back(t.grad().begin(), t.grad().end());
        } else {
            analytic.emplace_back(t.numel(), 0.0);
        }
        t.zero_grad();
    }
    return compare_gradients(f, params, analytic, options);
}

}  // namespace multifuser
