#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

struct MetricReport {
    double abs_rel = 0.0;
    double rmse = 0.0;
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    std::size_t n_pixels = 0;
};

/// Running sums so several frames pool into one pixel-weighted report.
class MetricAccumulator {
public:
    void add(double pred, double gt) {
        const double diff = pred - gt;
        abs_rel_ += std::abs(diff) / gt;
        sq_ += diff * diff;
        log_ += std::abs(std::log10(pred) - std::log10(gt));
        const double ratio = std::max(pred / gt, gt / pred);
        if (ratio < 1.25) ++d1_;
        if (ratio < 1.25 * 1.25) ++d2_;
        if (ratio < 1.25 * 1.25 * 1.25) ++d3_;
        ++n_;
    }

    void merge(const MetricAccumulator& o) {
        abs_rel_ += o.abs_rel_;
        sq_ += o.sq_;
        log_ += o.log_;
        d1_ += o.d1_;
        d2_ += o.d2_;
        d3_ += o.d3_;
        n_ += o.n_;
    }

    std::size_t count() const noexcept { return n_; }

    MetricReport report() const {
        if (n_ == 0) throw EvaluationError("no valid pixels to evaluate");
        const double n = static_cast<double>(n_);
        return {abs_rel_ / n, std::sqrt(sq_ / n), log_ / n, d1_ / n, d2_ / n, d3_ / n, n_};
    }

private:
    double abs_rel_ = 0.0, sq_ = 0.0, log_ = 0.0;
    std::size_t d1_ = 0, d2_ = 0, d3_ = 0, n_ = 0;
};

/// Accumulates the pixels where mask is set, gt is finite and d_min <= gt <= d_max.
template <typename P, typename G>
void accumulate_metrics(MetricAccumulator& acc, const Matrix<P>& pred, const Matrix<G>& gt,
                        const Matrix<std::uint8_t>* mask, double d_min, double d_max, const std::string& frame = {}) {
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || (mask && (mask->rows() != gt.rows() || mask->cols() != gt.cols()))) {
        throw ShapeError("metrics: prediction " + shape_string(pred) + " vs ground truth " + shape_string(gt));
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const double g = gt[i];
        if (!std::isfinite(g) || g < d_min || g > d_max) continue;
        const double p = pred[i];
        if (!std::isfinite(p) || !(p > 0.0)) {
            throw EvaluationError("non-positive or non-finite prediction" + (frame.empty() ? "" : " in " + frame));
        }
        acc.add(p, g);
    }
}

template <typename P, typename G>
MetricReport compute_metrics(const Matrix<P>& pred, const Matrix<G>& gt, const Matrix<std::uint8_t>* mask,
                             double d_min, double d_max, const std::string& frame = "frame") {
    MetricAccumulator acc;
    accumulate_metrics(acc, pred, gt, mask, d_min, d_max, frame);
    if (acc.count() == 0) throw EvaluationError("no valid pixels in " + frame);
    return acc.report();
}

} // namespace clipdepth
