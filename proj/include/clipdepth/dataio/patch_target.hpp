#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/errors.hpp"

namespace clipdepth {

/// Supervision for one patch. `valid` is the loss mask.
struct PatchTarget {
    double depth = 0.0;
    std::optional<std::size_t> bin; // 0-based
    bool valid = false;
};

/// Mean depth over the in-range, non-NaN pixels of one patch region. The patch is
/// masked out when fewer than half of its pixels survive the filter.
template <typename C>
PatchTarget patch_target(std::span<const float> pixels, double d_min, double d_max, std::span<const C> centers) {
    if (pixels.empty()) throw ShapeError("patch_target: empty patch region");
    double sum = 0.0;
    std::size_t kept = 0;
    for (float p : pixels) {
        if (std::isnan(p)) continue;
        const double d = p;
        if (d < d_min || d > d_max) continue;
        sum += d;
        ++kept;
    }
    PatchTarget t;
    if (kept == 0) return t;
    t.depth = sum / static_cast<double>(kept);
    if (2 * kept < pixels.size()) return t;
    t.valid = true;
    t.bin = assign_bin(t.depth, centers);
    return t;
}

inline PatchTarget patch_target(std::span<const float> pixels, const DatasetSpec& spec) {
    const auto centers = bin_centers(spec.range_min, spec.range_max, spec.bins);
    return patch_target(pixels, spec.d_min, spec.d_max, std::span<const double>(centers));
}

/// Patch targets for a whole frame in row-major grid order. Pixel (y, x) of the
/// img_h x img_w depth map belongs to patch (y * grid_h / img_h, x * grid_w / img_w).
/// Pixels where `keep` is false count toward the patch area but never toward its depth.
inline std::vector<PatchTarget> frame_patch_targets(const EmbeddingFrame& frame, const DatasetSpec& spec,
                                                    const std::vector<double>& centers,
                                                    const std::vector<bool>* keep = nullptr) {
    if (!frame.pixel_depth) throw DataError("frame " + std::to_string(frame.frame_id) + " has no pixel depth");
    const auto& depth = *frame.pixel_depth;
    if (depth.rows() != spec.img_h || depth.cols() != spec.img_w) throw ShapeError("pixel depth does not match spec");
    if (keep && keep->size() != spec.pixel_count()) throw ShapeError("pixel mask does not match spec");
    std::vector<std::vector<float>> regions(spec.patch_count());
    const float missing = std::nanf("");
    for (std::size_t y = 0; y < spec.img_h; ++y) {
        const std::size_t py = y * spec.grid_h / spec.img_h;
        for (std::size_t x = 0; x < spec.img_w; ++x) {
            const std::size_t px = x * spec.grid_w / spec.img_w;
            const bool kept = !keep || (*keep)[y * spec.img_w + x];
            regions[py * spec.grid_w + px].push_back(kept ? depth(y, x) : missing);
        }
    }
    std::vector<PatchTarget> targets;
    targets.reserve(regions.size());
    for (const auto& r : regions) {
        targets.push_back(patch_target(std::span<const float>(r), spec.d_min, spec.d_max, std::span<const double>(centers)));
    }
    return targets;
}

} // namespace clipdepth
