#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "clipdepth/errors.hpp"

namespace clipdepth {

/// Midpoints of K equal-width bins partitioning [range_min, range_max].
inline std::vector<double> bin_centers(double range_min, double range_max, std::size_t k) {
    if (k < 2) throw ParameterError("bin_centers: need K >= 2");
    if (!(range_max > range_min)) throw ParameterError("bin_centers: empty range");
    const double width = (range_max - range_min) / static_cast<double>(k);
    std::vector<double> centers(k);
    for (std::size_t j = 0; j < k; ++j) centers[j] = range_min + (static_cast<double>(j) + 0.5) * width;
    return centers;
}

/// K + 1 edges of the same partition.
inline std::vector<double> bin_edges(double range_min, double range_max, std::size_t k) {
    if (k < 2) throw ParameterError("bin_edges: need K >= 2");
    if (!(range_max > range_min)) throw ParameterError("bin_edges: empty range");
    const double width = (range_max - range_min) / static_cast<double>(k);
    std::vector<double> edges(k + 1);
    for (std::size_t j = 0; j <= k; ++j) edges[j] = range_min + static_cast<double>(j) * width;
    edges[k] = range_max;
    return edges;
}

/// Index (0-based) of the nearest center; ties go to the lower index.
template <typename C>
std::size_t assign_bin(double depth, std::span<const C> centers) {
    if (centers.empty()) throw ParameterError("assign_bin: no centers");
    std::size_t best = 0;
    double best_dist = std::abs(depth - static_cast<double>(centers[0]));
    for (std::size_t j = 1; j < centers.size(); ++j) {
        const double dist = std::abs(depth - static_cast<double>(centers[j]));
        if (dist < best_dist) {
            best = j;
            best_dist = dist;
        }
    }
    return best;
}

inline std::size_t assign_bin(double depth, const std::vector<double>& centers) {
    return assign_bin(depth, std::span<const double>(centers));
}

} // namespace clipdepth
