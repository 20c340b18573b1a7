#pragma once

// Masked training objectives over unit embeddings z (N x D) and the depth table.
// Every loss averages over patches with mask m_i = 1 and returns zero value and
// zero gradients when no patch is valid.

#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "clipdepth/errors.hpp"
#include "clipdepth/head/depth_table.hpp"
#include "clipdepth/ops.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

template <typename T>
using Accum = std::conditional_t<(sizeof(T) > sizeof(double)), T, double>;

template <typename T>
struct LossBundle {
    T value{};
    Matrix<T> grad_z;       // dL/dz, N x D
    Matrix<T> grad_weights; // dL/dW, K x D
    std::size_t n_valid = 0;

    LossBundle& operator+=(const LossBundle& other) {
        value += other.value;
        for (std::size_t i = 0; i < grad_z.size(); ++i) grad_z[i] += other.grad_z[i];
        for (std::size_t i = 0; i < grad_weights.size(); ++i) grad_weights[i] += other.grad_weights[i];
        return *this;
    }
    LossBundle& scale(T factor) {
        value *= factor;
        for (auto& v : grad_z.values()) v *= factor;
        for (auto& v : grad_weights.values()) v *= factor;
        return *this;
    }
};

namespace detail {

template <typename T>
std::size_t check_targets(const Matrix<T>& z, const DepthTable<T>& table, std::span<const std::size_t> bins,
                          std::span<const std::uint8_t> mask) {
    if (z.cols() != table.dim()) throw ShapeError("loss: embeddings " + shape_string(z) + " against table width");
    if (bins.size() != z.rows() || mask.size() != z.rows()) throw ShapeError("loss: target count differs from N");
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        if (bins[i] >= table.bins()) throw ParameterError("loss: bin index out of range");
        ++n;
    }
    return n;
}

/// Chain ds (N x K) through s = z Wᵀ / tau.
template <typename T>
void scores_backward(const Matrix<T>& ds, const Matrix<T>& z, const DepthTable<T>& table, LossBundle<T>& out) {
    out.grad_z = matmul(ds, table.weights.value);
    for (auto& v : out.grad_z.values()) v /= table.tau;
    accumulate_at_b(out.grad_weights, ds, z);
    for (auto& v : out.grad_weights.values()) v /= table.tau;
}

template <typename T>
LossBundle<T> empty_bundle(const Matrix<T>& z, const DepthTable<T>& table) {
    LossBundle<T> b;
    b.grad_z = Matrix<T>(z.rows(), z.cols());
    b.grad_weights = Matrix<T>(table.bins(), table.dim());
    return b;
}

} // namespace detail

/// -mean_i log softmax(z_i Wᵀ / tau)[y_i]
template <typename T>
LossBundle<T> info_nce(const Matrix<T>& z, const DepthTable<T>& table, std::span<const std::size_t> bins,
                       std::span<const std::uint8_t> mask) {
    const std::size_t n = detail::check_targets(z, table, bins, mask);
    auto out = detail::empty_bundle(z, table);
    if (n == 0) return out;
    out.n_valid = n;
    const auto sp = scores_probs(z, table);
    const T inv_n = T{1} / static_cast<T>(n);
    Matrix<T> ds(z.rows(), table.bins());
    Accum<T> total{};
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (!mask[i]) continue;
        const auto s = sp.scores.row(i);
        T peak = s[0];
        for (T v : s) peak = std::max(peak, v);
        Accum<T> sum{};
        for (T v : s) sum += std::exp(static_cast<Accum<T>>(v - peak));
        total += std::log(sum) + peak - s[bins[i]];
        auto g = ds.row(i);
        const auto p = sp.probs.row(i);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] = p[j] * inv_n;
        g[bins[i]] -= inv_n;
    }
    out.value = static_cast<T>(total) * inv_n;
    detail::scores_backward(ds, z, table, out);
    return out;
}

/// mean_i (1 - z_i . w_{y_i})
template <typename T>
LossBundle<T> align_loss(const Matrix<T>& z, const DepthTable<T>& table, std::span<const std::size_t> bins,
                         std::span<const std::uint8_t> mask) {
    const std::size_t n = detail::check_targets(z, table, bins, mask);
    auto out = detail::empty_bundle(z, table);
    if (n == 0) return out;
    out.n_valid = n;
    const T inv_n = T{1} / static_cast<T>(n);
    Accum<T> total{};
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (!mask[i]) continue;
        const auto zi = z.row(i);
        const auto w = table.weights.value.row(bins[i]);
        auto gw = out.grad_weights.row(bins[i]);
        auto gz = out.grad_z.row(i);
        Accum<T> dot{};
        for (std::size_t c = 0; c < zi.size(); ++c) {
            dot += zi[c] * w[c];
            gz[c] = -w[c] * inv_n;
            gw[c] -= zi[c] * inv_n;
        }
        total += Accum<T>{1} - dot;
    }
    out.value = static_cast<T>(total) * inv_n;
    return out;
}

/// align + lambda * InfoNCE
template <typename T>
LossBundle<T> emb_loss(const Matrix<T>& z, const DepthTable<T>& table, std::span<const std::size_t> bins,
                       std::span<const std::uint8_t> mask, T lambda) {
    auto out = align_loss(z, table, bins, mask);
    auto contrastive = info_nce(z, table, bins, mask);
    out += contrastive.scale(lambda);
    return out;
}

template <typename T>
struct RmseResult {
    T value{};
    std::vector<T> grad_pred;
    std::size_t n_valid = 0;
};

/// sqrt(mean_i (pred_i - target_i)^2) over valid entries; gradient is zero at zero loss.
template <typename T>
RmseResult<T> rmse_loss(std::span<const T> pred, std::span<const T> target, std::span<const std::uint8_t> mask) {
    if (pred.size() != target.size() || pred.size() != mask.size()) throw ShapeError("rmse_loss: length mismatch");
    RmseResult<T> out;
    out.grad_pred.assign(pred.size(), T{});
    Accum<T> sq{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!mask[i]) continue;
        const Accum<T> e = static_cast<Accum<T>>(pred[i]) - target[i];
        sq += e * e;
        ++out.n_valid;
    }
    if (out.n_valid == 0) return out;
    const Accum<T> loss = std::sqrt(sq / static_cast<Accum<T>>(out.n_valid));
    out.value = static_cast<T>(loss);
    if (loss == Accum<T>{0}) return out;
    const Accum<T> scale = Accum<T>{1} / (static_cast<Accum<T>>(out.n_valid) * loss);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask[i]) out.grad_pred[i] = static_cast<T>((static_cast<Accum<T>>(pred[i]) - target[i]) * scale);
    }
    return out;
}

/// Patch-level RMSE of the expected depth, differentiated back to z and W.
template <typename T>
LossBundle<T> depth_rmse_loss(const Matrix<T>& z, const DepthTable<T>& table, std::span<const T> target,
                              std::span<const std::uint8_t> mask) {
    if (z.cols() != table.dim()) throw ShapeError("depth loss: embeddings " + shape_string(z) + " against table width");
    if (target.size() != z.rows() || mask.size() != z.rows()) throw ShapeError("depth loss: target count differs from N");
    auto out = detail::empty_bundle(z, table);
    const auto sp = scores_probs(z, table);
    const auto pred = expected_depth(sp.probs, table.centers);
    const auto r = rmse_loss(std::span<const T>(pred), target, mask);
    out.value = r.value;
    out.n_valid = r.n_valid;
    if (r.n_valid == 0) return out;
    Matrix<T> dp(z.rows(), table.bins());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (r.grad_pred[i] == T{0}) continue;
        auto row = dp.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = r.grad_pred[i] * table.centers[j];
    }
    const Matrix<T> ds = softmax_rows_backward(sp.probs, dp);
    detail::scores_backward(ds, z, table, out);
    return out;
}

} // namespace clipdepth
