#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <vector>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

/// Per-depth-range breakdown of predictions against ground truth. Rows follow the
/// retained ground-truth bins; joint columns cover every prediction bin so each
/// row of `joint` sums to the matching `gt_hist` entry.
struct AnalysisTables {
    std::vector<double> edges;         // K + 1 edges, meters
    std::vector<std::size_t> gt_bins;  // retained ground-truth bin indices (0-based)
    Matrix<std::size_t> joint;         // gt_bins.size() x K counts
    std::vector<double> sigma;         // std. dev. of predictions per retained gt bin
    std::vector<double> mean_pred;     // mean prediction per retained gt bin
    std::vector<std::size_t> gt_hist;  // sample count per retained gt bin
};

/// Bin of `v` under `edges`; values outside the edge span fall into the end bins.
inline std::size_t bin_of(double v, std::span<const double> edges) {
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, v);
    return static_cast<std::size_t>(it - (edges.begin() + 1));
}

inline AnalysisTables analysis_tables(std::span<const double> gt, std::span<const double> pred,
                                      std::span<const double> edges, const std::set<std::size_t>& trim = {}) {
    if (gt.size() != pred.size()) throw ShapeError("analysis: gt and prediction counts differ");
    if (gt.empty()) throw EvaluationError("analysis: no (gt, prediction) pairs");
    if (edges.size() < 3) throw ParameterError("analysis: need at least two bins");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw ParameterError("analysis: edges must be strictly increasing");
    }
    const std::size_t k = edges.size() - 1;
    Matrix<std::size_t> joint(k, k, 0);
    std::vector<double> sum(k, 0.0), sum_sq(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const std::size_t g = bin_of(gt[i], edges);
        const std::size_t p = bin_of(pred[i], edges);
        ++joint(g, p);
        ++count[g];
        sum[g] += pred[i];
        sum_sq[g] += pred[i] * pred[i];
    }
    AnalysisTables out;
    out.edges.assign(edges.begin(), edges.end());
    for (std::size_t g = 0; g < k; ++g) {
        if (!trim.contains(g)) out.gt_bins.push_back(g);
    }
    out.joint = Matrix<std::size_t>(out.gt_bins.size(), k, 0);
    for (std::size_t r = 0; r < out.gt_bins.size(); ++r) {
        const std::size_t g = out.gt_bins[r];
        for (std::size_t p = 0; p < k; ++p) out.joint(r, p) = joint(g, p);
        out.gt_hist.push_back(count[g]);
        if (count[g] == 0) {
            out.sigma.push_back(0.0);
            out.mean_pred.push_back(0.0);
            continue;
        }
        const double n = static_cast<double>(count[g]);
        const double mean = sum[g] / n;
        double var = sum_sq[g] / n - mean * mean;
        if (var < 0.0) var = 0.0; // rounding
        out.mean_pred.push_back(mean);
        out.sigma.push_back(std::sqrt(var));
    }
    return out;
}

} // namespace clipdepth
