#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

inline constexpr std::size_t kPatchPixels = 14;

/// Geometry and depth bounds shared by every frame of one embedding file.
struct DatasetSpec {
    std::uint32_t dim = 768;
    std::uint32_t grid_h = 24;
    std::uint32_t grid_w = 24;
    std::uint32_t img_h = 336;
    std::uint32_t img_w = 336;
    float d_min = 0.001f;
    float d_max = 10.0f;
    float range_min = 0.0f;
    float range_max = 10.0f;
    std::uint32_t bins = 15;

    std::size_t patch_count() const noexcept { return std::size_t{grid_h} * grid_w; }
    std::size_t pixel_count() const noexcept { return std::size_t{img_h} * img_w; }

    void validate() const {
        if (dim == 0 || grid_h == 0 || grid_w == 0 || img_h == 0 || img_w == 0) {
            throw ParameterError("dataset spec: dimensions must be positive");
        }
        if (bins < 2) throw ParameterError("dataset spec: need at least 2 depth bins");
        if (!std::isfinite(d_min) || !std::isfinite(d_max) || !(d_min >= 0.0f) || !(d_min < d_max)) {
            throw ParameterError("dataset spec: require 0 <= d_min < d_max");
        }
        if (!std::isfinite(range_min) || !std::isfinite(range_max) || !(range_min < range_max)) {
            throw ParameterError("dataset spec: require range_min < range_max");
        }
        if (img_h < grid_h || img_w < grid_w) {
            throw ParameterError("dataset spec: image smaller than patch grid");
        }
    }

    friend bool operator==(const DatasetSpec&, const DatasetSpec&) = default;

    /// NYU Depth V2 convention: 336x336 input, 0-10 m table.
    static DatasetSpec nyu(std::uint32_t d = 768) {
        return DatasetSpec{d, 24, 24, 336, 336, 0.001f, 10.0f, 0.0f, 10.0f, 15};
    }
    /// KITTI convention: 336x1344 input split into four square tiles, 0-30 m table.
    static DatasetSpec kitti(std::uint32_t d = 768) {
        return DatasetSpec{d, 24, 96, 336, 1344, 0.001f, 30.0f, 0.0f, 30.0f, 15};
    }
};

/// One image: patch embeddings in row-major grid order (one patch per row) and the CLS vector.
struct EmbeddingFrame {
    Matrix<float> patches;
    Matrix<float> cls;
    std::optional<Matrix<float>> flipped_patches;
    std::optional<Matrix<float>> flipped_cls;
    std::optional<Matrix<float>> pixel_depth; // img_h x img_w, NaN = missing
    std::size_t frame_id = 0;
};

struct Dataset {
    DatasetSpec spec;
    bool has_flipped = false;
    bool has_pixel_depth = false;
    std::vector<EmbeddingFrame> frames;

    /// Checks every frame against the spec and the type invariants.
    void validate() const {
        spec.validate();
        for (const auto& f : frames) {
            const auto where = " (frame " + std::to_string(f.frame_id) + ")";
            if (f.patches.rows() != spec.patch_count() || f.patches.cols() != spec.dim) {
                throw ShapeError("patch embeddings are " + shape_string(f.patches) + where);
            }
            if (f.cls.rows() != 1 || f.cls.cols() != spec.dim) throw ShapeError("cls is " + shape_string(f.cls) + where);
            if (f.flipped_patches.has_value() != has_flipped || f.flipped_cls.has_value() != has_flipped) {
                throw DataError("flipped embeddings presence disagrees with dataset flag" + where);
            }
            if (has_flipped && (!f.flipped_patches->same_shape(f.patches) || !f.flipped_cls->same_shape(f.cls))) {
                throw ShapeError("flipped embeddings shape mismatch" + where);
            }
            if (f.pixel_depth.has_value() != has_pixel_depth) {
                throw DataError("pixel depth presence disagrees with dataset flag" + where);
            }
            if (has_pixel_depth && (f.pixel_depth->rows() != spec.img_h || f.pixel_depth->cols() != spec.img_w)) {
                throw ShapeError("pixel depth is " + shape_string(*f.pixel_depth) + where);
            }
            auto finite = [](const Matrix<float>& m) {
                for (float v : m.values())
                    if (!std::isfinite(v)) return false;
                return true;
            };
            if (!finite(f.patches) || !finite(f.cls) || (has_flipped && (!finite(*f.flipped_patches) || !finite(*f.flipped_cls)))) {
                throw DataError("non-finite embedding entry" + where);
            }
            if (has_pixel_depth) {
                for (float v : f.pixel_depth->values()) {
                    if (!std::isnan(v) && !(v >= 0.0f && std::isfinite(v))) throw DataError("invalid pixel depth" + where);
                }
            }
        }
    }
};

} // namespace clipdepth
