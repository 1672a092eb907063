#pragma once

#include <functional>
#include <string>
#include <vector>

#include "catt/tensor.hpp"

namespace catt {

// Builds the (scalar) loss on a fresh tape from the current parameter values.
// Must be deterministic.
using LossFn = std::function<Value(Graph&)>;

struct GradcheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradcheckReport {
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    std::size_t checked = 0;
    std::vector<GradcheckEntry> failures;
    bool passed() const { return failures.empty(); }
};

struct GradcheckOptions {
    double step = 1e-5;
    double tolerance = 1e-5;
    // Test hook: applied to the analytic gradients before comparison
    // (negative-control path). Leave empty in normal use.
    std::function<void(std::vector<Tensor>&)> tamper_analytic;
};

// Compares reverse-mode gradients against central differences
// (f(t+h) - f(t-h)) / 2h for every entry of every parameter. Relative error
// uses denominator max(|g_ad|, |g_fd|, 1e-8).
GradcheckReport finite_diff_gradcheck(const LossFn& f, const std::vector<ParamPtr>& params,
                                      const GradcheckOptions& options = {});

}  // namespace catt
