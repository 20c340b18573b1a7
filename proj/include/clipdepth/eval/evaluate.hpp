#pragma once

#include <string>
#include <vector>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/dataio/patch_target.hpp"
#include "clipdepth/eval/crop.hpp"
#include "clipdepth/eval/metrics.hpp"
#include "clipdepth/eval/reconstruct.hpp"
#include "clipdepth/head/predict.hpp"

namespace clipdepth {

struct EvalOptions {
    CropSpec crop = CropSpec::none();
    Tta tta = Tta::on;
    bool patch_level = false; // compare patch predictions with patch targets instead of pixels
};

/// Keep-mask of the crop over an img_h x img_w depth map, as a flat vector.
inline std::vector<bool> crop_keep(const CropSpec& crop, std::size_t h, std::size_t w) {
    const auto m = crop_mask(crop, h, w);
    std::vector<bool> keep(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) keep[i] = m[i] != 0;
    return keep;
}

/// Pixel-level prediction of a frame at its ground-truth resolution.
inline Matrix<float> predict_pixels(const EmbeddingFrame& frame, const DatasetSpec& spec, const Model<float>& model,
                                    Tta tta) {
    const DepthGrid grid = predict_frame(frame, spec, model, tta);
    return upsample_to_pixels(grid.depth, std::size_t{spec.grid_h} * kPatchPixels, std::size_t{spec.grid_w} * kPatchPixels,
                              spec.img_h, spec.img_w);
}

inline void accumulate_frame(MetricAccumulator& acc, const EmbeddingFrame& frame, const DatasetSpec& spec,
                             const Model<float>& model, const EvalOptions& opt) {
    const std::string name = "frame " + std::to_string(frame.frame_id);
    if (!frame.pixel_depth) throw DataError(name + " has no ground-truth depth");
    if (opt.patch_level) {
        const auto centers = bin_centers(spec.range_min, spec.range_max, spec.bins);
        const auto keep = crop_keep(opt.crop, spec.img_h, spec.img_w);
        const auto targets = frame_patch_targets(frame, spec, centers, &keep);
        const DepthGrid grid = predict_frame(frame, spec, model, opt.tta);
        Matrix<double> gt(spec.grid_h, spec.grid_w);
        Matrix<std::uint8_t> mask(spec.grid_h, spec.grid_w, 0);
        for (std::size_t i = 0; i < targets.size(); ++i) {
            gt[i] = targets[i].depth;
            mask[i] = targets[i].valid ? 1 : 0;
        }
        accumulate_metrics(acc, grid.depth, gt, &mask, spec.d_min, spec.d_max, name);
        return;
    }
    const auto pred = predict_pixels(frame, spec, model, opt.tta);
    const auto mask = crop_mask(opt.crop, spec.img_h, spec.img_w);
    accumulate_metrics(acc, pred, *frame.pixel_depth, &mask, spec.d_min, spec.d_max, name);
}

/// Pixel-weighted metrics over every frame of the dataset.
inline MetricReport evaluate_dataset(const Dataset& ds, const Model<float>& model, const EvalOptions& opt) {
    if (ds.frames.empty()) throw ParameterError("evaluation set is empty");
    MetricAccumulator acc;
    for (const auto& f : ds.frames) accumulate_frame(acc, f, ds.spec, model, opt);
    return acc.report();
}

} // namespace clipdepth
