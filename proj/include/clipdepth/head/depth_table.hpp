#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/pceb.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/ops.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

/// K learnable unit vectors anchored to fixed metric bin centers.
template <typename T>
struct DepthTable {
    Param<T> weights; // K x D, unit rows
    std::vector<T> centers;
    T tau = T(0.07);

    std::size_t bins() const noexcept { return weights.value.rows(); }
    std::size_t dim() const noexcept { return weights.value.cols(); }

    /// Projects every row back onto the unit sphere.
    void normalize() { weights.value = l2_normalize(weights.value); }
};

template <typename T>
std::vector<T> table_centers(double range_min, double range_max, std::size_t k) {
    const auto c = bin_centers(range_min, range_max, k);
    return std::vector<T>(c.begin(), c.end());
}

/// Table rows from a PCTB file, checked against the expected K and D.
template <typename T>
DepthTable<T> init_depth_table(const TableInit& source, std::size_t k, std::size_t d, std::vector<T> centers, T tau) {
    if (source.vectors.rows() != k || source.vectors.cols() != d) {
        throw ParameterError("depth table init holds " + shape_string(source.vectors) + " vectors, expected " +
                             shape_string(k, d));
    }
    if (!(tau > T{0})) throw ParameterError("temperature must be positive");
    if (centers.size() != k) throw ParameterError("center count differs from K");
    DepthTable<T> t;
    t.weights = Param<T>(source.vectors.cast<T>());
    t.centers = std::move(centers);
    t.tau = tau;
    t.normalize();
    return t;
}

/// Table rows drawn from an isotropic Gaussian with a fixed seed.
template <typename T>
DepthTable<T> init_depth_table(std::uint64_t seed, std::size_t k, std::size_t d, std::vector<T> centers, T tau) {
    if (!(tau > T{0})) throw ParameterError("temperature must be positive");
    if (centers.size() != k) throw ParameterError("center count differs from K");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix<T> w(k, d);
    for (auto& v : w.values()) v = static_cast<T>(gauss(rng));
    DepthTable<T> t;
    t.weights = Param<T>(std::move(w));
    t.centers = std::move(centers);
    t.tau = tau;
    t.normalize();
    return t;
}

template <typename T>
struct ScoresProbs {
    Matrix<T> scores;
    Matrix<T> probs;
};

/// s_ij = (z_i . w_j) / tau and row-softmax probabilities.
template <typename T>
ScoresProbs<T> scores_probs(const Matrix<T>& unit_embeddings, const DepthTable<T>& table) {
    if (!(table.tau > T{0})) throw ParameterError("temperature must be positive");
    if (unit_embeddings.cols() != table.dim()) {
        throw ShapeError("scores: embeddings " + shape_string(unit_embeddings) + " against table " +
                         shape_string(table.weights.value));
    }
    Matrix<T> s = matmul_bt(unit_embeddings, table.weights.value);
    for (auto& v : s.values()) v /= table.tau;
    Matrix<T> p = softmax_rows(s);
    return {std::move(s), std::move(p)};
}

/// d_i = sum_j p_ij c_j
template <typename T>
std::vector<T> expected_depth(const Matrix<T>& probs, std::span<const T> centers) {
    if (probs.cols() != centers.size()) throw ShapeError("expected_depth: probability width differs from K");
    std::vector<T> d(probs.rows());
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        const auto pr = probs.row(r);
        T acc{};
        for (std::size_t j = 0; j < pr.size(); ++j) acc += pr[j] * centers[j];
        d[r] = acc;
    }
    return d;
}

template <typename T>
std::vector<T> expected_depth(const Matrix<T>& probs, const std::vector<T>& centers) {
    return expected_depth(probs, std::span<const T>(centers));
}

} // namespace clipdepth
