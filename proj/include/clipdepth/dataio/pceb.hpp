#pragma once

// PCEB: patch-embedding dataset file. PCTB: depth-table initialization file.
// Both little-endian, 32-bit reals.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "clipdepth/dataio/binary_io.hpp"
#include "clipdepth/dataio/dataset.hpp"
#include "clipdepth/errors.hpp"

namespace clipdepth {

inline constexpr std::uint32_t kPcebVersion = 1;
inline constexpr std::uint32_t kPctbVersion = 1;
inline constexpr std::uint32_t kFlagHasFlipped = 1u << 0;
inline constexpr std::uint32_t kFlagHasPixelDepth = 1u << 1;

inline Bytes encode_pceb(const Dataset& ds) {
    ds.validate();
    const auto& s = ds.spec;
    ByteWriter w;
    w.put_tag("PCEB");
    w.put_u32(kPcebVersion);
    w.put_u32((ds.has_flipped ? kFlagHasFlipped : 0u) | (ds.has_pixel_depth ? kFlagHasPixelDepth : 0u));
    w.put_u32(s.dim);
    w.put_u32(s.grid_h);
    w.put_u32(s.grid_w);
    w.put_u32(s.img_h);
    w.put_u32(s.img_w);
    w.put_u32(static_cast<std::uint32_t>(ds.frames.size()));
    w.put_f32(s.d_min);
    w.put_f32(s.d_max);
    w.put_f32(s.range_min);
    w.put_f32(s.range_max);
    w.put_u32(s.bins);
    for (const auto& f : ds.frames) {
        w.put_f32s(f.patches.values());
        w.put_f32s(f.cls.values());
        if (ds.has_flipped) {
            w.put_f32s(f.flipped_patches->values());
            w.put_f32s(f.flipped_cls->values());
        }
        if (ds.has_pixel_depth) w.put_f32s(f.pixel_depth->values());
    }
    return w.take();
}

inline Dataset decode_pceb(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("PCEB", "PCEB header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.get_u32("PCEB version");
    if (version != kPcebVersion) {
        throw ParseError(ParseError::Kind::bad_version, version_at, "PCEB: unsupported version " + std::to_string(version));
    }
    const std::size_t flags_at = r.offset();
    const std::uint32_t flags = r.get_u32("PCEB flags");
    if (flags & ~(kFlagHasFlipped | kFlagHasPixelDepth)) {
        throw ParseError(ParseError::Kind::invalid, flags_at, "PCEB: unknown flag bits");
    }
    Dataset ds;
    ds.has_flipped = flags & kFlagHasFlipped;
    ds.has_pixel_depth = flags & kFlagHasPixelDepth;
    auto& s = ds.spec;
    s.dim = r.get_u32("PCEB header");
    s.grid_h = r.get_u32("PCEB header");
    s.grid_w = r.get_u32("PCEB header");
    s.img_h = r.get_u32("PCEB header");
    s.img_w = r.get_u32("PCEB header");
    const std::uint32_t count = r.get_u32("PCEB header");
    s.d_min = r.get_f32("PCEB header");
    s.d_max = r.get_f32("PCEB header");
    s.range_min = r.get_f32("PCEB header");
    s.range_max = r.get_f32("PCEB header");
    s.bins = r.get_u32("PCEB header");
    const std::size_t header_end = r.offset();
    try {
        s.validate();
    } catch (const ParameterError& e) {
        throw ParseError(ParseError::Kind::invalid, header_end, std::string("PCEB: ") + e.what());
    }
    const std::size_t per_frame =
        4 * ((s.patch_count() * s.dim + s.dim) * (ds.has_flipped ? 2 : 1) + (ds.has_pixel_depth ? s.pixel_count() : 0));
    if (per_frame != 0 && r.remaining() / per_frame < count) {
        // Report the offset of the first incomplete frame.
        const std::size_t complete = r.remaining() / per_frame;
        throw ParseError(ParseError::Kind::truncated, header_end + complete * per_frame,
                         "PCEB: truncated in frame " + std::to_string(complete));
    }
    ds.frames.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        EmbeddingFrame f;
        f.frame_id = i;
        f.patches = Matrix<float>(s.patch_count(), s.dim);
        r.get_f32s(f.patches.values(), "PCEB frame");
        f.cls = Matrix<float>(1, s.dim);
        r.get_f32s(f.cls.values(), "PCEB frame");
        if (ds.has_flipped) {
            f.flipped_patches = Matrix<float>(s.patch_count(), s.dim);
            r.get_f32s(f.flipped_patches->values(), "PCEB frame");
            f.flipped_cls = Matrix<float>(1, s.dim);
            r.get_f32s(f.flipped_cls->values(), "PCEB frame");
        }
        if (ds.has_pixel_depth) {
            f.pixel_depth = Matrix<float>(s.img_h, s.img_w);
            r.get_f32s(f.pixel_depth->values(), "PCEB frame");
        }
        ds.frames.push_back(std::move(f));
    }
    if (r.remaining() != 0) throw ParseError(ParseError::Kind::invalid, r.offset(), "PCEB: trailing bytes");
    try {
        ds.validate();
    } catch (const Error& e) {
        throw ParseError(ParseError::Kind::invalid, header_end, std::string("PCEB: ") + e.what());
    }
    return ds;
}

inline void write_pceb(const std::filesystem::path& path, const Dataset& ds) { write_file_bytes(path, encode_pceb(ds)); }
inline Dataset read_pceb(const std::filesystem::path& path) { return decode_pceb(read_file_bytes(path)); }

/// Contents of a PCTB file: K vectors of width D and their metric centers.
struct TableInit {
    Matrix<float> vectors; // K x D
    std::vector<float> centers;
};

inline Bytes encode_pctb(const TableInit& t) {
    if (t.vectors.rows() != t.centers.size()) throw ShapeError("PCTB: vector count differs from center count");
    ByteWriter w;
    w.put_tag("PCTB");
    w.put_u32(kPctbVersion);
    w.put_u32(static_cast<std::uint32_t>(t.vectors.rows()));
    w.put_u32(static_cast<std::uint32_t>(t.vectors.cols()));
    w.put_f32s(t.vectors.values());
    w.put_f32s(t.centers);
    return w.take();
}

inline TableInit decode_pctb(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("PCTB", "PCTB header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.get_u32("PCTB version");
    if (version != kPctbVersion) {
        throw ParseError(ParseError::Kind::bad_version, version_at, "PCTB: unsupported version " + std::to_string(version));
    }
    const std::uint32_t k = r.get_u32("PCTB header");
    const std::uint32_t d = r.get_u32("PCTB header");
    if (k == 0 || d == 0) throw ParseError(ParseError::Kind::invalid, r.offset(), "PCTB: empty table");
    TableInit t;
    t.vectors = Matrix<float>(k, d);
    r.get_f32s(t.vectors.values(), "PCTB vectors");
    t.centers.resize(k);
    r.get_f32s(t.centers, "PCTB centers");
    if (r.remaining() != 0) throw ParseError(ParseError::Kind::invalid, r.offset(), "PCTB: trailing bytes");
    return t;
}

inline void write_pctb(const std::filesystem::path& path, const TableInit& t) { write_file_bytes(path, encode_pctb(t)); }
inline TableInit read_pctb(const std::filesystem::path& path) { return decode_pctb(read_file_bytes(path)); }

} // namespace clipdepth
