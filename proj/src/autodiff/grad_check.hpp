#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "autodiff/parameters.hpp"

namespace ffae::ad {

struct GradCheckOptions {
    double eps = 1e-3;
    // 0 checks every coordinate; otherwise this many seeded random
    // coordinates per parameter tensor.
    std::size_t coords_per_param = 0;
    std::uint64_t seed = 0;
    double denominator_floor = 1e-8;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t coordinates_checked = 0;
    std::string worst_parameter;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Compares reverse-mode gradients of the scalar built by `f` against central
// differences (f(p+eps) - f(p-eps)) / 2eps. Relative error per coordinate is
// |a - n| / max(|a|, |n|, floor). Throws on a non-finite f.
GradCheckResult grad_check(const std::function<Value()>& f, ParameterSet& params,
                           const GradCheckOptions& options = {});

}  // namespace ffae::ad
