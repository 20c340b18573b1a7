#pragma once

// Desk-scale synthetic embeddings with a planted depth geometry. Each patch depth
// d is encoded as a point on a quarter circle in a fixed random 2-plane,
//   e = cos(a) u1 + sin(a) u2 + noise * g,   a = (pi/2) (d - range_min) / (range_max - range_min),
// where g is Gaussian with covariance I/D restricted to the orthogonal complement
// of the plane, then e is unit-normalized. Depth is exactly recoverable from the
// in-plane angle for every noise level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/dataio/grid.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

struct SynthOptions {
    bool flipped = true;
    bool pixel_depth = true;
};

struct SynthDataset {
    Dataset data;
    Matrix<double> plane; // 2 x D, orthonormal rows u1, u2
    std::vector<std::vector<float>> patch_depths; // per frame, row-major grid order
};

/// Depth encoded by an embedding, read back from its angle in the planted plane.
inline double planted_depth(std::span<const float> e, const Matrix<double>& plane, double range_min, double range_max) {
    double a = 0.0;
    double b = 0.0;
    for (std::size_t c = 0; c < e.size(); ++c) {
        a += plane(0, c) * e[c];
        b += plane(1, c) * e[c];
    }
    const double angle = std::atan2(b, a);
    return range_min + angle / (std::numbers::pi / 2.0) * (range_max - range_min);
}

inline SynthDataset synth_generate(std::uint64_t seed, const DatasetSpec& spec, std::size_t frames, double noise,
                                   SynthOptions options = {}) {
    spec.validate();
    if (frames == 0) throw ParameterError("synth: need at least one frame");
    if (!(noise >= 0.0) || noise >= 1.0) throw ParameterError("synth: noise must lie in [0, 1)");
    if (spec.dim < 3) throw ParameterError("synth: embedding width must be at least 3");
    if (spec.img_h % spec.grid_h != 0 || spec.img_w % spec.grid_w != 0) {
        throw ParameterError("synth: image size must be a whole number of patches");
    }
    const std::size_t d = spec.dim;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthonormal plane via Gram-Schmidt on two Gaussian draws.
    Matrix<double> plane(2, d);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t c = 0; c < d; ++c) plane(r, c) = gauss(rng);
    }
    auto normalize_row = [&](std::size_t r) {
        double n = 0.0;
        for (double v : plane.row(r)) n += v * v;
        n = std::sqrt(n);
        for (double& v : plane.row(r)) v /= n;
    };
    normalize_row(0);
    double proj = 0.0;
    for (std::size_t c = 0; c < d; ++c) proj += plane(0, c) * plane(1, c);
    for (std::size_t c = 0; c < d; ++c) plane(1, c) -= proj * plane(0, c);
    normalize_row(1);

    SynthDataset out;
    out.plane = plane;
    auto& ds = out.data;
    ds.spec = spec;
    ds.has_flipped = options.flipped;
    ds.has_pixel_depth = options.pixel_depth;
    std::uniform_real_distribution<double> depth_dist(spec.range_min, spec.range_max);
    const double span = static_cast<double>(spec.range_max) - spec.range_min;
    const double noise_scale = noise / std::sqrt(static_cast<double>(d));
    const GridShape grid{spec.grid_h, spec.grid_w};
    std::vector<double> e(d);

    for (std::size_t i = 0; i < frames; ++i) {
        EmbeddingFrame f;
        f.frame_id = i;
        f.patches = Matrix<float>(spec.patch_count(), d);
        std::vector<float> depths(spec.patch_count());
        std::vector<double> mean(d, 0.0);
        for (std::size_t p = 0; p < spec.patch_count(); ++p) {
            const double depth = std::clamp(depth_dist(rng), static_cast<double>(spec.range_min),
                                            static_cast<double>(spec.range_max));
            depths[p] = static_cast<float>(depth);
            const double angle = (std::numbers::pi / 2.0) * (depth - spec.range_min) / span;
            for (std::size_t c = 0; c < d; ++c) e[c] = noise_scale * gauss(rng);
            double a = 0.0;
            double b = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                a += plane(0, c) * e[c];
                b += plane(1, c) * e[c];
            }
            const double ca = std::cos(angle);
            const double sa = std::sin(angle);
            double norm = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                e[c] += (ca - a) * plane(0, c) + (sa - b) * plane(1, c);
                norm += e[c] * e[c];
            }
            norm = std::sqrt(norm);
            auto row = f.patches.row(p);
            for (std::size_t c = 0; c < d; ++c) {
                row[c] = static_cast<float>(e[c] / norm);
                mean[c] += row[c];
            }
        }
        double mnorm = 0.0;
        for (double v : mean) mnorm += v * v;
        mnorm = std::sqrt(mnorm);
        f.cls = Matrix<float>(1, d);
        for (std::size_t c = 0; c < d; ++c) f.cls(0, c) = static_cast<float>(mean[c] / mnorm);
        if (options.flipped) {
            f.flipped_patches = hflip_cells(f.patches, grid);
            f.flipped_cls = f.cls;
        }
        if (options.pixel_depth) {
            Matrix<float> px(spec.img_h, spec.img_w);
            for (std::size_t y = 0; y < spec.img_h; ++y) {
                for (std::size_t x = 0; x < spec.img_w; ++x) {
                    px(y, x) = depths[(y * spec.grid_h / spec.img_h) * spec.grid_w + x * spec.grid_w / spec.img_w];
                }
            }
            f.pixel_depth = std::move(px);
        }
        out.patch_depths.push_back(std::move(depths));
        ds.frames.push_back(std::move(f));
    }
    return out;
}

} // namespace clipdepth
