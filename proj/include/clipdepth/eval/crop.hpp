#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

enum class CropKind { none, eigen, garg };

/// Evaluation region. Eigen bounds are absolute pixels on a 480x640 reference image
/// (half-open), scaled proportionally for other sizes. Garg bounds are fractions of
/// the image size.
struct CropSpec {
    CropKind kind = CropKind::none;
    double row_begin = 0, row_end = 0, col_begin = 0, col_end = 0;

    static CropSpec none() { return {}; }
    static CropSpec eigen() { return {CropKind::eigen, 45, 471, 41, 601}; }
    static CropSpec garg() { return {CropKind::garg, 0.40810811, 0.99189189, 0.03594771, 0.96405229}; }

    static CropSpec parse(std::string_view name) {
        if (name == "none") return none();
        if (name == "eigen") return eigen();
        if (name == "garg") return garg();
        throw ParameterError("unknown crop \"" + std::string(name) + "\" (expected none, eigen, garg)");
    }
    std::string_view name() const {
        switch (kind) {
        case CropKind::eigen: return "eigen";
        case CropKind::garg: return "garg";
        default: return "none";
        }
    }
};

inline constexpr std::size_t kEigenReferenceHeight = 480;
inline constexpr std::size_t kEigenReferenceWidth = 640;

/// height x width mask, 1 inside the evaluation region.
inline Matrix<std::uint8_t> crop_mask(const CropSpec& spec, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0) throw ParameterError("crop_mask: image dims must be positive");
    std::size_t r0 = 0, r1 = height, c0 = 0, c1 = width;
    switch (spec.kind) {
    case CropKind::none: break;
    case CropKind::eigen: {
        const double sy = static_cast<double>(height) / kEigenReferenceHeight;
        const double sx = static_cast<double>(width) / kEigenReferenceWidth;
        r0 = static_cast<std::size_t>(std::lround(spec.row_begin * sy));
        r1 = static_cast<std::size_t>(std::lround(spec.row_end * sy));
        c0 = static_cast<std::size_t>(std::lround(spec.col_begin * sx));
        c1 = static_cast<std::size_t>(std::lround(spec.col_end * sx));
        break;
    }
    case CropKind::garg:
        r0 = static_cast<std::size_t>(spec.row_begin * static_cast<double>(height));
        r1 = static_cast<std::size_t>(spec.row_end * static_cast<double>(height));
        c0 = static_cast<std::size_t>(spec.col_begin * static_cast<double>(width));
        c1 = static_cast<std::size_t>(spec.col_end * static_cast<double>(width));
        break;
    default: throw ParameterError("crop_mask: unknown crop kind");
    }
    r1 = std::min(r1, height);
    c1 = std::min(c1, width);
    Matrix<std::uint8_t> mask(height, width, 0);
    for (std::size_t y = r0; y < r1; ++y) {
        for (std::size_t x = c0; x < c1; ++x) mask(y, x) = 1;
    }
    return mask;
}

} // namespace clipdepth
