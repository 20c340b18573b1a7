#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

template <typename T>
struct GradCheckReport {
    T max_relative_error{};
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    std::size_t coordinates = 0;
};

/// Compares the analytic gradients already stored in `params[i]->grad` against
/// central differences of `loss()` with step `h`, coordinate by coordinate.
/// The relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8).
template <typename T, typename Loss>
GradCheckReport<T> grad_check(Loss&& loss, std::span<Param<T>* const> params, T h) {
    if (!(h > T{0})) throw ParameterError("grad_check: step must be positive");
    GradCheckReport<T> report;
    const T floor = static_cast<T>(1e-8);
    auto evaluate = [&]() {
        const T v = static_cast<T>(loss());
        if (!std::isfinite(static_cast<double>(v))) throw EvaluationError("grad_check: loss is not finite");
        return v;
    };
    evaluate();
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& param = *params[p];
        if (!param.grad.same_shape(param.value)) throw ShapeError("grad_check: grad shape differs from value");
        for (std::size_t i = 0; i < param.value.size(); ++i) {
            const T saved = param.value[i];
            param.value[i] = saved + h;
            const T up = evaluate();
            param.value[i] = saved - h;
            const T down = evaluate();
            param.value[i] = saved;
            const T numeric = (up - down) / (T{2} * h);
            const T analytic = param.grad[i];
            const T denom = std::max({std::abs(analytic), std::abs(numeric), floor});
            const T err = std::abs(analytic - numeric) / denom;
            ++report.coordinates;
            if (err > report.max_relative_error) {
                report.max_relative_error = err;
                report.worst_param = p;
                report.worst_index = i;
            }
        }
    }
    return report;
}

} // namespace clipdepth
