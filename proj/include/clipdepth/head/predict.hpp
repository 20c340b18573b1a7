#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/dataio/grid.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/eval/reconstruct.hpp"
#include "clipdepth/head/model.hpp"

namespace clipdepth {

/// Per-patch depth prediction for one frame.
struct DepthGrid {
    Matrix<float> depth;          // grid_h x grid_w, meters
    Matrix<std::uint8_t> valid;   // 1 where depth is defined
};

enum class Tta { off, on, strict };

/// Eval-mode depth for a cell matrix sharing a single CLS vector.
template <typename T>
std::vector<T> predict_cells(const Matrix<T>& patches, const Matrix<T>& cls, const Model<T>& model) {
    std::mt19937_64 unused(0);
    const Matrix<T> cls_rows = model.head.use_cls ? repeat_rows(cls, patches.rows()) : Matrix<T>{};
    const Matrix<T> z = model.head.forward(patches, cls_rows, Mode::eval, unused);
    const auto sp = scores_probs(z, model.table);
    return expected_depth(sp.probs, model.table.centers);
}

namespace detail {

// Wide grids run tile by tile, each tile with the frame's CLS vector.
inline std::vector<Matrix<float>> predict_tiles(const Matrix<float>& patches, const Matrix<float>& cls, GridShape shape,
                                               const Model<float>& model) {
    const bool tiled = shape.width > shape.height && shape.width % shape.height == 0;
    const std::vector<Matrix<float>> cells = tiled ? tile_split(patches, shape) : std::vector<Matrix<float>>{patches};
    const std::size_t tile_w = tiled ? shape.height : shape.width;
    std::vector<Matrix<float>> maps;
    for (const auto& t : cells) {
        const auto d = predict_cells(t, cls, model);
        maps.emplace_back(shape.height, tile_w, std::vector<float>(d.begin(), d.end()));
    }
    return maps;
}

} // namespace detail

/// Depth grid for a frame. With TTA the flipped embeddings are predicted too, the
/// result mirrored back and averaged with the direct prediction. `Tta::on` falls
/// back to a single pass when the frame has no flipped embeddings; `Tta::strict`
/// raises DataError instead.
inline DepthGrid predict_frame(const EmbeddingFrame& frame, const DatasetSpec& spec, const Model<float>& model,
                               Tta tta) {
    if (frame.patches.cols() != model.config.dim) throw ShapeError("predict: frame width differs from model width");
    const GridShape shape{spec.grid_h, spec.grid_w};
    const auto direct = detail::predict_tiles(frame.patches, frame.cls, shape, model);
    const bool have_flip = frame.flipped_patches.has_value() && frame.flipped_cls.has_value();
    if (tta == Tta::strict && !have_flip) {
        throw DataError("frame " + std::to_string(frame.frame_id) + " has no flipped embeddings for TTA");
    }
    Matrix<float> depth;
    if (tta != Tta::off && have_flip) {
        const auto flipped = detail::predict_tiles(*frame.flipped_patches, *frame.flipped_cls, shape, model);
        depth = tta_and_merge(direct, &flipped);
    } else {
        depth = tta_and_merge(direct);
    }
    return {std::move(depth), Matrix<std::uint8_t>(spec.grid_h, spec.grid_w, 1)};
}

} // namespace clipdepth
