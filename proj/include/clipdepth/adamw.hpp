#pragma once

#include <cmath>
#include <cstdint>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

/// Moments and hyperparameters for one parameter tensor under AdamW.
template <typename T>
struct AdamWState {
    Matrix<T> m;
    Matrix<T> v;
    std::uint64_t t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;

    AdamWState() = default;
    AdamWState(std::size_t rows, std::size_t cols, double learning_rate, double decay)
        : m(rows, cols), v(rows, cols), lr(learning_rate), weight_decay(decay) {}

    static AdamWState for_param(const Param<T>& p, double learning_rate, double decay) {
        return AdamWState(p.value.rows(), p.value.cols(), learning_rate, decay);
    }
};

/// One decoupled-weight-decay Adam update. The gradient is read, never cleared.
template <typename T>
void adamw_step(Param<T>& param, AdamWState<T>& state) {
    if (!state.m.same_shape(param.value) || !state.v.same_shape(param.value) || !param.grad.same_shape(param.value)) {
        throw ShapeError("adamw_step: state " + shape_string(state.m) + " for param " + shape_string(param.value));
    }
    if (!(state.lr >= 0.0)) throw ParameterError("adamw_step: negative learning rate");
    state.t += 1;
    const T b1 = static_cast<T>(state.beta1);
    const T b2 = static_cast<T>(state.beta2);
    const T correction1 = static_cast<T>(1.0 - std::pow(state.beta1, static_cast<double>(state.t)));
    const T correction2 = static_cast<T>(1.0 - std::pow(state.beta2, static_cast<double>(state.t)));
    const T lr = static_cast<T>(state.lr);
    const T eps = static_cast<T>(state.eps);
    const T decay = static_cast<T>(state.lr * state.weight_decay);
    auto theta = param.value.values();
    const auto g = param.grad.values();
    auto m = state.m.values();
    auto v = state.v.values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (T{1} - b1) * g[i];
        v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
        const T m_hat = m[i] / correction1;
        const T v_hat = v[i] / correction2;
        const T old = theta[i];
        theta[i] = old - lr * (m_hat / (std::sqrt(v_hat) + eps)) - decay * old;
    }
}

} // namespace clipdepth
