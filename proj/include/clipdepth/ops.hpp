#pragma once

// Forward/backward pairs for the small op set the depth head is built from.
// Every backward takes the upstream gradient and returns the gradient w.r.t. the
// op input; parameter gradients are accumulated into Param::grad.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

enum class Mode { train, eval };

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kNormTolerance = 1e-12;

// ---------------------------------------------------------------------------
// affine: y = x·W + b

template <typename T>
Matrix<T> affine(const Matrix<T>& x, const Param<T>& weight, const Param<T>& bias) {
    if (x.cols() != weight.value.rows() || bias.value.rows() != 1 || bias.value.cols() != weight.value.cols()) {
        throw ShapeError("affine: input " + shape_string(x) + ", weight " + shape_string(weight.value) + ", bias " +
                         shape_string(bias.value));
    }
    Matrix<T> y = matmul(x, weight.value);
    const auto b = bias.value.row(0);
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto yr = y.row(r);
        for (std::size_t c = 0; c < yr.size(); ++c) yr[c] += b[c];
    }
    return y;
}

template <typename T>
Matrix<T> affine_backward(const Matrix<T>& x, Param<T>& weight, Param<T>& bias, const Matrix<T>& dy) {
    if (dy.rows() != x.rows() || dy.cols() != weight.value.cols()) {
        throw ShapeError("affine_backward: upstream " + shape_string(dy));
    }
    accumulate_at_b(weight.grad, x, dy);
    auto db = bias.grad.row(0);
    for (std::size_t r = 0; r < dy.rows(); ++r) {
        const auto g = dy.row(r);
        for (std::size_t c = 0; c < g.size(); ++c) db[c] += g[c];
    }
    return matmul_bt(dy, weight.value);
}

// ---------------------------------------------------------------------------
// layer_norm: per row (x - mean) / sqrt(var + eps) * gain + shift, population variance

template <typename T>
struct LayerNormCache {
    Matrix<T> normalized;
    std::vector<T> inv_std;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Param<T>& gain, const Param<T>& shift, T eps,
                     LayerNormCache<T>* cache = nullptr) {
    const std::size_t d = x.cols();
    if (d == 0 || gain.value.size() != d || shift.value.size() != d) {
        throw ShapeError("layer_norm: input " + shape_string(x) + ", gain " + shape_string(gain.value));
    }
    Matrix<T> xhat(x.rows(), d);
    std::vector<T> inv_std(x.rows());
    Matrix<T> y(x.rows(), d);
    const auto g = gain.value.values();
    const auto b = shift.value.values();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto xr = x.row(r);
        T mean{};
        for (T v : xr) mean += v;
        mean /= static_cast<T>(d);
        T var{};
        for (T v : xr) var += (v - mean) * (v - mean);
        var /= static_cast<T>(d);
        const T inv = T{1} / std::sqrt(var + eps);
        inv_std[r] = inv;
        auto hr = xhat.row(r);
        auto yr = y.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            hr[c] = (xr[c] - mean) * inv;
            yr[c] = hr[c] * g[c] + b[c];
        }
    }
    if (cache) {
        cache->normalized = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const LayerNormCache<T>& cache, Param<T>& gain, Param<T>& shift, const Matrix<T>& dy) {
    const auto& xhat = cache.normalized;
    if (!dy.same_shape(xhat)) throw ShapeError("layer_norm_backward: upstream " + shape_string(dy));
    const std::size_t d = xhat.cols();
    const auto g = gain.value.values();
    auto dg = gain.grad.values();
    auto db = shift.grad.values();
    Matrix<T> dx(xhat.rows(), d);
    std::vector<T> dxhat(d);
    for (std::size_t r = 0; r < xhat.rows(); ++r) {
        const auto hr = xhat.row(r);
        const auto gr = dy.row(r);
        T sum{};
        T dot{};
        for (std::size_t c = 0; c < d; ++c) {
            dg[c] += gr[c] * hr[c];
            db[c] += gr[c];
            dxhat[c] = gr[c] * g[c];
            sum += dxhat[c];
            dot += dxhat[c] * hr[c];
        }
        const T scale = cache.inv_std[r] / static_cast<T>(d);
        auto out = dx.row(r);
        for (std::size_t c = 0; c < d; ++c) {
            out[c] = scale * (static_cast<T>(d) * dxhat[c] - sum - hr[c] * dot);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// gelu, tanh approximation

template <typename T>
T gelu_scalar(T x) {
    const T k = static_cast<T>(std::sqrt(2.0L / std::numbers::pi_v<long double>));
    const T inner = k * (x + T(0.044715) * x * x * x);
    return T(0.5) * x * (T{1} + std::tanh(inner));
}

template <typename T>
T gelu_derivative(T x) {
    const T k = static_cast<T>(std::sqrt(2.0L / std::numbers::pi_v<long double>));
    const T inner = k * (x + T(0.044715) * x * x * x);
    const T t = std::tanh(inner);
    return T(0.5) * (T{1} + t) + T(0.5) * x * (T{1} - t * t) * k * (T{1} + T(3 * 0.044715) * x * x);
}

template <typename T>
Matrix<T> gelu(const Matrix<T>& x) {
    Matrix<T> y(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = gelu_scalar(x[i]);
    return y;
}

template <typename T>
Matrix<T> gelu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
    if (!dy.same_shape(x)) throw ShapeError("gelu_backward: upstream " + shape_string(dy));
    Matrix<T> dx(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * gelu_derivative(x[i]);
    return dx;
}

// ---------------------------------------------------------------------------
// dropout (inverted). The mask stores the per-entry multiplier: 0 or 1/(1-rate).

template <typename T>
struct DropoutResult {
    Matrix<T> output;
    Matrix<T> mask; // empty when the op was the identity
};

template <typename T>
DropoutResult<T> dropout(const Matrix<T>& x, double rate, Mode mode, std::mt19937_64& rng) {
    if (!(rate >= 0.0) || rate >= 1.0) {
        throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) return {x, {}};
    Matrix<T> mask(x.rows(), x.cols());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.size(); ++i) {
        // 53 random mantissa bits; implementation independent unlike std::bernoulli_distribution
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        mask[i] = u < rate ? T{0} : keep_scale;
    }
    Matrix<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
    return {std::move(y), std::move(mask)};
}

template <typename T>
Matrix<T> dropout_backward(const Matrix<T>& mask, const Matrix<T>& dy) {
    if (mask.empty()) return dy;
    if (!mask.same_shape(dy)) throw ShapeError("dropout_backward: upstream " + shape_string(dy));
    Matrix<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask[i];
    return dx;
}

// ---------------------------------------------------------------------------
// l2_normalize rows

template <typename T>
struct NormalizeCache {
    Matrix<T> output;
    std::vector<T> norms;
};

template <typename T>
Matrix<T> l2_normalize(const Matrix<T>& x, NormalizeCache<T>* cache = nullptr) {
    Matrix<T> y(x.rows(), x.cols());
    std::vector<T> norms(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        T sq{};
        for (T v : x.row(r)) sq += v * v;
        const T norm = std::sqrt(sq);
        if (!(norm > static_cast<T>(kNormTolerance))) {
            throw DegenerateVectorError("l2_normalize: row " + std::to_string(r) + " has norm below tolerance");
        }
        norms[r] = norm;
        auto out = y.row(r);
        const auto in = x.row(r);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] = in[c] / norm;
    }
    if (cache) {
        cache->output = y;
        cache->norms = std::move(norms);
    }
    return y;
}

template <typename T>
Matrix<T> l2_normalize_backward(const NormalizeCache<T>& cache, const Matrix<T>& dy) {
    const auto& y = cache.output;
    if (!dy.same_shape(y)) throw ShapeError("l2_normalize_backward: upstream " + shape_string(dy));
    Matrix<T> dx(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
        const auto yr = y.row(r);
        const auto gr = dy.row(r);
        T dot{};
        for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * gr[c];
        auto out = dx.row(r);
        for (std::size_t c = 0; c < yr.size(); ++c) out[c] = (gr[c] - yr[c] * dot) / cache.norms[r];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// softmax over rows

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& x) {
    Matrix<T> p(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto xr = x.row(r);
        T peak = -std::numeric_limits<T>::infinity();
        for (T v : xr) peak = std::max(peak, v);
        auto pr = p.row(r);
        T total{};
        for (std::size_t c = 0; c < xr.size(); ++c) {
            pr[c] = std::exp(xr[c] - peak);
            total += pr[c];
        }
        for (T& v : pr) v /= total;
    }
    return p;
}

template <typename T>
Matrix<T> softmax_rows_backward(const Matrix<T>& p, const Matrix<T>& dp) {
    if (!dp.same_shape(p)) throw ShapeError("softmax_rows_backward: upstream " + shape_string(dp));
    Matrix<T> ds(p.rows(), p.cols());
    for (std::size_t r = 0; r < p.rows(); ++r) {
        const auto pr = p.row(r);
        const auto gr = dp.row(r);
        T dot{};
        for (std::size_t c = 0; c < pr.size(); ++c) dot += pr[c] * gr[c];
        auto out = ds.row(r);
        for (std::size_t c = 0; c < pr.size(); ++c) out[c] = pr[c] * (gr[c] - dot);
    }
    return ds;
}

} // namespace clipdepth
