#include "autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "common/rng.hpp"

namespace ffae::ad {
namespace {

double evaluate(const std::function<Value()>& f) {
    const double v = f().item();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: function value is not finite");
    return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Value()>& f, ParameterSet& params, const GradCheckOptions& options) {
    params.zero_grad();
    const Value root = f();
    if (!std::isfinite(root.item())) throw std::runtime_error("grad_check: function value is not finite");
    root.backward();

    Rng rng(options.seed);
    GradCheckResult result;
    for (auto& [name, p] : params) {
        const std::size_t n = p.value().size();
        const Tensor analytic = p.grad().empty() ? Tensor(p.rows(), p.cols()) : p.grad();
        std::vector<std::size_t> coords;
        if (options.coords_per_param == 0 || options.coords_per_param >= n) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            coords = rng.sample_without_replacement(n, options.coords_per_param);
        }
        for (std::size_t i : coords) {
            double& x = p.mutable_value()[i];
            const double saved = x;
            x = saved + options.eps;
            const double up = evaluate(f);
            x = saved - options.eps;
            const double down = evaluate(f);
            x = saved;
            const double numeric = (up - down) / (2.0 * options.eps);
            const double a = analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
            const double err = std::abs(a - numeric) / denom;
            ++result.coordinates_checked;
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_parameter = name + "[" + std::to_string(i) + "]";
                result.worst_analytic = a;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace ffae::ad
