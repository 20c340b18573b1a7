#pragma once

// Random small instances of the full head + loss composition, used to compare
// analytic gradients through phi, psi and W against central differences.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/grad_check.hpp"
#include "clipdepth/head/model.hpp"
#include "clipdepth/losses.hpp"

namespace clipdepth {

enum class Objective { infonce, align, emb, rmse };

inline constexpr std::array<Objective, 4> kObjectives = {Objective::infonce, Objective::align, Objective::emb,
                                                         Objective::rmse};

inline std::string_view objective_name(Objective o) {
    switch (o) {
    case Objective::infonce: return "infonce";
    case Objective::align: return "align";
    case Objective::emb: return "emb";
    default: return "rmse";
    }
}

template <typename T>
struct LossInstance {
    Model<T> model;
    Matrix<T> patches;
    Matrix<T> cls_rows;
    std::vector<std::size_t> bins;
    std::vector<T> depth;
    std::vector<std::uint8_t> mask;
    std::uint64_t dropout_seed = 0;
    T lambda = T{1};
};

/// N patches of width D against a K-bin table over 0-10 m. About a fifth of the
/// patches are masked out; at least one stays valid.
template <typename T>
LossInstance<T> random_loss_instance(std::uint64_t seed, std::size_t n, std::size_t k, std::size_t d,
                                     bool use_cls = true, double tau = 0.07) {
    LossInstance<T> c;
    ModelConfig cfg;
    cfg.dim = static_cast<std::uint32_t>(d);
    cfg.bins = static_cast<std::uint32_t>(k);
    cfg.tau = tau;
    cfg.use_cls = use_cls;
    c.model = make_model<T>(cfg, seed, nullptr, seed + 1);
    std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> depth(0.0, 10.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    Matrix<T> raw(n, d);
    for (auto& v : raw.values()) v = static_cast<T>(gauss(rng));
    c.patches = l2_normalize(raw);
    Matrix<T> mean(1, d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) mean(0, j) += c.patches(r, j);
    }
    c.cls_rows = use_cls ? repeat_rows(l2_normalize(mean), n) : Matrix<T>{};

    const auto centers = bin_centers(0.0, 10.0, k);
    for (std::size_t i = 0; i < n; ++i) {
        const double di = depth(rng);
        c.depth.push_back(static_cast<T>(di));
        c.bins.push_back(assign_bin(di, centers));
        c.mask.push_back(coin(rng) < 0.2 ? 0 : 1);
    }
    c.mask[0] = 1;
    c.dropout_seed = rng();
    return c;
}

/// Loss value of the instance. With `backward` the gradients of every model
/// parameter are left in Param::grad.
template <typename T>
T instance_loss(LossInstance<T>& c, Objective o, bool backward) {
    std::mt19937_64 rng(c.dropout_seed);
    typename RotationHead<T>::Cache cache;
    const Matrix<T> z = c.model.head.forward(c.patches, c.cls_rows, Mode::train, rng, backward ? &cache : nullptr);
    const std::span<const std::size_t> bins(c.bins);
    const std::span<const std::uint8_t> mask(c.mask);
    LossBundle<T> loss;
    switch (o) {
    case Objective::infonce: loss = info_nce(z, c.model.table, bins, mask); break;
    case Objective::align: loss = align_loss(z, c.model.table, bins, mask); break;
    case Objective::emb: loss = emb_loss(z, c.model.table, bins, mask, c.lambda); break;
    case Objective::rmse: loss = depth_rmse_loss(z, c.model.table, std::span<const T>(c.depth), mask); break;
    }
    if (backward) {
        c.model.zero_grad();
        c.model.head.backward(cache, loss.grad_z);
        c.model.table.weights.grad = std::move(loss.grad_weights);
    }
    return loss.value;
}

template <typename T>
GradCheckReport<T> check_instance(LossInstance<T>& c, Objective o, T h) {
    instance_loss(c, o, true);
    std::vector<Param<T>*> params;
    for (auto& [name, p] : c.model.named_params()) params.push_back(p);
    return grad_check([&] { return instance_loss(c, o, false); }, std::span<Param<T>* const>(params), h);
}

struct GradientSuiteResult {
    std::array<double, 4> max_error{}; // per objective, in kObjectives order
    std::size_t instances = 0;
    std::size_t coordinates = 0;

    double worst() const {
        double w = 0.0;
        for (double e : max_error) w = std::max(w, e);
        return w;
    }
};

/// Every objective on `instances` random cases in extended precision.
inline GradientSuiteResult run_gradient_suite(std::uint64_t seed, std::size_t instances, std::size_t n = 16,
                                              std::size_t k = 5, std::size_t d = 8) {
    using Ext = long double;
    GradientSuiteResult out;
    out.instances = instances;
    for (std::size_t i = 0; i < instances; ++i) {
        auto c = random_loss_instance<Ext>(seed + 7919 * i, n, k, d, i % 2 == 0);
        for (std::size_t o = 0; o < kObjectives.size(); ++o) {
            const auto r = check_instance(c, kObjectives[o], Ext{1e-6L});
            out.max_error[o] = std::max(out.max_error[o], static_cast<double>(r.max_relative_error));
            out.coordinates += r.coordinates;
        }
    }
    return out;
}

} // namespace clipdepth
