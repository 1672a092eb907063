#include "catt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace catt {

GradcheckReport finite_diff_gradcheck(const LossFn& f, const std::vector<ParamPtr>& params,
                                      const GradcheckOptions& options) {
    if (options.step <= 0.0) throw ConfigError("gradcheck: step must be positive");

    auto forward = [&]() {
        Graph g;
        Value loss = f(g);
        const Tensor& out = g.value(loss);
        if (out.size() != 1) throw ShapeError("gradcheck: loss must be scalar");
        return out.data[0];
    };

    // analytic pass
    std::vector<Tensor> saved_grads;
    for (const auto& p : params) saved_grads.push_back(p->grad);
    for (const auto& p : params) p->zero_grad();
    {
        Graph g;
        Value loss = f(g);
        g.backward(loss);
    }
    std::vector<Tensor> analytic;
    for (const auto& p : params) analytic.push_back(p->grad);
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->grad = saved_grads[i];

    if (options.tamper_analytic) options.tamper_analytic(analytic);

    GradcheckReport report;
    report.tolerance = options.tolerance;
    double h = options.step;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            double original = p.value.data[i];
            p.value.data[i] = original + h;
            double f_plus = forward();
            p.value.data[i] = original - h;
            double f_minus = forward();
            p.value.data[i] = original;

            double numeric = (f_plus - f_minus) / (2.0 * h);
            double a = analytic[pi].data[i];
            double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            double rel = std::fabs(a - numeric) / denom;
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
            if (rel > options.tolerance) {
                report.failures.push_back({p.name, i, a, numeric, rel});
            }
        }
    }
    return report;
}

}  // namespace catt
