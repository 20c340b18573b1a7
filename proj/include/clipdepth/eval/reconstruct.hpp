#pragma once

#include <cstddef>
#include <vector>

#include "clipdepth/dataio/grid.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

/// Merges per-tile depth maps left to right. When predictions for the flipped
/// image are given, the merged flipped map is mirrored back and averaged in.
template <typename T>
Matrix<T> tta_and_merge(const std::vector<Matrix<T>>& direct, const std::vector<Matrix<T>>* flipped = nullptr) {
    if (direct.empty()) throw ShapeError("tta_and_merge: no tiles");
    auto merge = [](const std::vector<Matrix<T>>& tiles) {
        if (tiles.size() == 1) return tiles.front();
        return tile_merge_map(tiles);
    };
    Matrix<T> out = merge(direct);
    if (!flipped) return out;
    if (flipped->size() != direct.size()) throw ShapeError("tta_and_merge: flipped tile count differs");
    const Matrix<T> mirrored = hflip(merge(*flipped));
    if (!mirrored.same_shape(out)) throw ShapeError("tta_and_merge: flipped map shape differs");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] + mirrored[i]) / T{2};
    return out;
}

/// Nearest-within-patch reconstruction at (grid * 14) resolution, then bilinear
/// resampling (half-pixel centers) to the ground-truth size when it differs.
template <typename T>
Matrix<T> upsample_to_pixels(const Matrix<T>& grid, std::size_t img_h, std::size_t img_w, std::size_t gt_h,
                             std::size_t gt_w) {
    if (grid.empty() || img_h == 0 || img_w == 0 || gt_h == 0 || gt_w == 0) {
        throw ShapeError("upsample_to_pixels: empty geometry");
    }
    if (img_h % grid.rows() != 0 || img_w % grid.cols() != 0) {
        throw ShapeError("upsample_to_pixels: image " + shape_string(img_h, img_w) + " is not a whole number of " +
                         shape_string(grid) + " patches");
    }
    const std::size_t ph = img_h / grid.rows();
    const std::size_t pw = img_w / grid.cols();
    Matrix<T> blocks(img_h, img_w);
    for (std::size_t y = 0; y < img_h; ++y) {
        for (std::size_t x = 0; x < img_w; ++x) blocks(y, x) = grid(y / ph, x / pw);
    }
    if (gt_h == img_h && gt_w == img_w) return blocks;

    Matrix<T> out(gt_h, gt_w);
    const double sy = static_cast<double>(img_h) / static_cast<double>(gt_h);
    const double sx = static_cast<double>(img_w) / static_cast<double>(gt_w);
    auto source = [](std::size_t i, double scale, std::size_t n, std::size_t& lo, std::size_t& hi, double& frac) {
        double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
        if (s < 0.0) s = 0.0;
        lo = static_cast<std::size_t>(s);
        if (lo >= n - 1) {
            lo = n - 1;
            hi = n - 1;
            frac = 0.0;
            return;
        }
        hi = lo + 1;
        frac = s - static_cast<double>(lo);
    };
    for (std::size_t y = 0; y < gt_h; ++y) {
        std::size_t y0, y1;
        double fy;
        source(y, sy, img_h, y0, y1, fy);
        for (std::size_t x = 0; x < gt_w; ++x) {
            std::size_t x0, x1;
            double fx;
            source(x, sx, img_w, x0, x1, fx);
            const double top = (1.0 - fx) * blocks(y0, x0) + fx * blocks(y0, x1);
            const double bottom = (1.0 - fx) * blocks(y1, x0) + fx * blocks(y1, x1);
            out(y, x) = static_cast<T>((1.0 - fy) * top + fy * bottom);
        }
    }
    return out;
}

} // namespace clipdepth
