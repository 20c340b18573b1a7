#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "clipdepth/ops.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Param<T>*>>;

/// LayerNorm -> Linear -> GELU -> Dropout -> Linear.
template <typename T>
struct Mlp {
    Param<T> ln_gain;
    Param<T> ln_shift;
    Param<T> fc1_weight; // in x hidden
    Param<T> fc1_bias;   // 1 x hidden
    Param<T> fc2_weight; // hidden x out
    Param<T> fc2_bias;   // 1 x out
    double dropout_rate = 0.1;

    struct Cache {
        LayerNormCache<T> ln;
        Matrix<T> normed;
        Matrix<T> pre_activation;
        Matrix<T> dropout_mask;
        Matrix<T> hidden;
    };

    std::size_t in_width() const noexcept { return fc1_weight.value.rows(); }
    std::size_t hidden_width() const noexcept { return fc1_weight.value.cols(); }
    std::size_t out_width() const noexcept { return fc2_weight.value.cols(); }

    /// Linear layers drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); LayerNorm starts as identity.
    static Mlp init(std::size_t in, std::size_t hidden, std::size_t out, double rate, std::mt19937_64& rng) {
        Mlp m;
        m.ln_gain = Param<T>(Matrix<T>(1, in, T{1}));
        m.ln_shift = Param<T>(Matrix<T>(1, in));
        auto uniform = [&](std::size_t r, std::size_t c, std::size_t fan_in) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Matrix<T> w(r, c);
            for (auto& v : w.values()) v = static_cast<T>(dist(rng));
            return Param<T>(std::move(w));
        };
        m.fc1_weight = uniform(in, hidden, in);
        m.fc1_bias = uniform(1, hidden, in);
        m.fc2_weight = uniform(hidden, out, hidden);
        m.fc2_bias = uniform(1, out, hidden);
        m.dropout_rate = rate;
        return m;
    }

    Matrix<T> forward(const Matrix<T>& x, Mode mode, std::mt19937_64& rng, Cache* cache = nullptr) const {
        LayerNormCache<T> ln_cache;
        Matrix<T> normed = layer_norm(x, ln_gain, ln_shift, static_cast<T>(kLayerNormEps), cache ? &ln_cache : nullptr);
        Matrix<T> pre = affine(normed, fc1_weight, fc1_bias);
        auto dropped = dropout(gelu(pre), dropout_rate, mode, rng);
        Matrix<T> y = affine(dropped.output, fc2_weight, fc2_bias);
        if (cache) {
            cache->ln = std::move(ln_cache);
            cache->normed = std::move(normed);
            cache->pre_activation = std::move(pre);
            cache->dropout_mask = std::move(dropped.mask);
            cache->hidden = std::move(dropped.output);
        }
        return y;
    }

    Matrix<T> backward(const Cache& c, const Matrix<T>& dy) {
        Matrix<T> d_hidden = affine_backward(c.hidden, fc2_weight, fc2_bias, dy);
        Matrix<T> d_act = dropout_backward(c.dropout_mask, d_hidden);
        Matrix<T> d_pre = gelu_backward(c.pre_activation, d_act);
        Matrix<T> d_normed = affine_backward(c.normed, fc1_weight, fc1_bias, d_pre);
        return layer_norm_backward(c.ln, ln_gain, ln_shift, d_normed);
    }

    NamedParams<T> named_params(const std::string& prefix) {
        return {{prefix + ".ln.gain", &ln_gain},       {prefix + ".ln.shift", &ln_shift},
                {prefix + ".fc1.weight", &fc1_weight}, {prefix + ".fc1.bias", &fc1_bias},
                {prefix + ".fc2.weight", &fc2_weight}, {prefix + ".fc2.bias", &fc2_bias}};
    }
};

} // namespace clipdepth
