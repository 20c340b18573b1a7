#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/grid.hpp"
#include "clipdepth/dataio/patch_target.hpp"
#include "clipdepth/dataio/pceb.hpp"
#include "clipdepth/dataio/synth.hpp"

using namespace clipdepth;

namespace {

const float kNaN = std::numeric_limits<float>::quiet_NaN();

DatasetSpec small_spec(std::uint32_t dim = 6) {
    DatasetSpec s;
    s.dim = dim;
    s.grid_h = 3;
    s.grid_w = 3;
    s.img_h = 42;
    s.img_w = 42;
    return s;
}

PatchTarget target_of(std::vector<float> px, double d_min = 0.001, double d_max = 10.0) {
    const auto c = bin_centers(0.0, 10.0, 15);
    return patch_target(std::span<const float>(px), d_min, d_max, std::span<const double>(c));
}

} // namespace

TEST(BinCenters, PaperValues) {
    EXPECT_NEAR(bin_centers(0, 10, 15).front(), 1.0 / 3.0, 1e-9);
    const auto k = bin_centers(0, 30, 15);
    EXPECT_NEAR(k[12], 25.0, 1e-9);
    EXPECT_NEAR(k[13], 27.0, 1e-9);
    EXPECT_NEAR(k[14], 29.0, 1e-9);
    const auto two = bin_centers(0, 2, 2);
    EXPECT_DOUBLE_EQ(two[0], 0.5);
    EXPECT_DOUBLE_EQ(two[1], 1.5);
    EXPECT_THROW(bin_centers(0, 10, 1), ParameterError);
}

TEST(BinCenters, ConstantSpacingAndSelfAssignment) {
    for (auto [lo, hi, k] : {std::tuple{0.0, 10.0, 15u}, std::tuple{0.0, 30.0, 15u}, std::tuple{-1.0, 4.0, 7u}}) {
        const auto c = bin_centers(lo, hi, k);
        for (std::size_t j = 0; j + 1 < c.size(); ++j) EXPECT_NEAR(c[j + 1] - c[j], (hi - lo) / k, 1e-12);
        for (std::size_t j = 0; j < c.size(); ++j) EXPECT_EQ(assign_bin(c[j], c), j);
        const auto e = bin_edges(lo, hi, k);
        ASSERT_EQ(e.size(), k + 1);
        for (std::size_t j = 0; j < c.size(); ++j) EXPECT_NEAR(c[j], 0.5 * (e[j] + e[j + 1]), 1e-12);
    }
}

TEST(AssignBin, Examples) {
    const auto c = bin_centers(0, 10, 15);
    EXPECT_EQ(assign_bin(0.0, c), 0u);
    EXPECT_EQ(assign_bin(c[4], c), 4u);
    // exact midpoints go to the lower bin
    const std::vector<double> simple{1.0, 3.0, 5.0};
    EXPECT_EQ(assign_bin(2.0, simple), 0u);
    EXPECT_EQ(assign_bin(4.0, simple), 1u);
    EXPECT_EQ(assign_bin(100.0, c), 14u);
}

TEST(PatchTarget, PlainMean) {
    const auto t = target_of({1, 2, 3});
    EXPECT_TRUE(t.valid);
    EXPECT_DOUBLE_EQ(t.depth, 2.0);
    ASSERT_TRUE(t.bin.has_value());
}

TEST(PatchTarget, ExactlyHalfMissingIsKept) {
    // 12 m is outside [d_min, d_max]: two of four pixels remain, which is not
    // "more than half missing"
    const auto t = target_of({1, kNaN, 3, 12});
    EXPECT_DOUBLE_EQ(t.depth, 2.0);
    EXPECT_TRUE(t.valid);
}

TEST(PatchTarget, MostlyMissingIsInvalid) {
    const auto t = target_of({kNaN, kNaN, kNaN, 5});
    EXPECT_FALSE(t.valid);
    EXPECT_FALSE(t.bin.has_value());
    EXPECT_FALSE(target_of({kNaN, kNaN}).valid);
    EXPECT_THROW(target_of({}), ShapeError);
}

TEST(PatchTarget, MeanMatchesWideReference) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<float> u(0.0f, 12.0f);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<float> px(1 + trial % 40);
        for (auto& v : px) v = coin(rng) < 0.2 ? kNaN : u(rng);
        long double sum = 0;
        std::size_t kept = 0;
        for (float v : px) {
            if (!std::isnan(v) && v >= 0.001f && v <= 10.0f) {
                sum += v;
                ++kept;
            }
        }
        const auto t = target_of(px);
        EXPECT_EQ(t.valid, kept > 0 && 2 * kept >= px.size());
        if (t.valid) { EXPECT_NEAR(t.depth, static_cast<double>(sum / kept), 1e-6); }
    }
}

TEST(FramePatchTargets, PixelsMapToTheirPatch) {
    auto spec = small_spec();
    auto synth = synth_generate(9, spec, 1, 0.0);
    const auto& frame = synth.data.frames[0];
    const auto c = bin_centers(spec.range_min, spec.range_max, spec.bins);
    const auto targets = frame_patch_targets(frame, spec, c);
    ASSERT_EQ(targets.size(), 9u);
    for (std::size_t i = 0; i < 9; ++i) {
        EXPECT_TRUE(targets[i].valid);
        EXPECT_NEAR(targets[i].depth, synth.patch_depths[0][i], 1e-5);
    }
    // dropping the left half of every pixel row invalidates the first patch column only
    std::vector<bool> keep(spec.pixel_count(), true);
    for (std::size_t y = 0; y < 42; ++y) {
        for (std::size_t x = 0; x < 8; ++x) keep[y * 42 + x] = false;
    }
    const auto cropped = frame_patch_targets(frame, spec, c, &keep);
    for (std::size_t r = 0; r < 3; ++r) {
        EXPECT_FALSE(cropped[r * 3].valid);
        EXPECT_TRUE(cropped[r * 3 + 1].valid);
    }
}

TEST(Synth, DeterministicPerSeed) {
    const auto spec = small_spec();
    const auto a = synth_generate(5, spec, 3, 0.1);
    const auto b = synth_generate(5, spec, 3, 0.1);
    const auto c = synth_generate(6, spec, 3, 0.1);
    EXPECT_EQ(encode_pceb(a.data), encode_pceb(b.data));
    EXPECT_NE(encode_pceb(a.data), encode_pceb(c.data));
}

TEST(Synth, NoiselessEmbeddingsLieOnThePlane) {
    const auto spec = small_spec(10);
    const auto s = synth_generate(1, spec, 2, 0.0);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto& m = s.data.frames[f].patches;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double a = 0, b = 0;
            for (std::size_t c = 0; c < m.cols(); ++c) {
                a += s.plane(0, c) * m(r, c);
                b += s.plane(1, c) * m(r, c);
            }
            double resid = 0;
            for (std::size_t c = 0; c < m.cols(); ++c) {
                const double e = m(r, c) - a * s.plane(0, c) - b * s.plane(1, c);
                resid += e * e;
            }
            EXPECT_LE(std::sqrt(resid), 1e-6);
        }
    }
}

TEST(Synth, DepthsInRangeAndRecoverable) {
    const auto spec = small_spec(12);
    const auto s = synth_generate(2, spec, 4, 0.3);
    for (std::size_t f = 0; f < 4; ++f) {
        const auto& frame = s.data.frames[f];
        for (std::size_t i = 0; i < spec.patch_count(); ++i) {
            const float d = s.patch_depths[f][i];
            EXPECT_GE(d, spec.range_min);
            EXPECT_LE(d, spec.range_max);
            EXPECT_NEAR(planted_depth(frame.patches.row(i), s.plane, spec.range_min, spec.range_max), d, 1e-4);
        }
        double norm = 0;
        for (float v : frame.cls.row(0)) norm += v * v;
        EXPECT_NEAR(norm, 1.0, 1e-6);
        EXPECT_EQ(*frame.flipped_patches, hflip_cells(frame.patches, GridShape{3, 3}));
        const auto& pd = *frame.pixel_depth;
        EXPECT_EQ(pd(0, 0), s.patch_depths[f][0]);
        EXPECT_EQ(pd(41, 41), s.patch_depths[f][8]);
    }
}

TEST(Synth, InjectiveAtZeroNoise) {
    DatasetSpec spec = small_spec(8);
    const auto s = synth_generate(4, spec, 2, 0.0);
    const auto& a = s.data.frames[0].patches;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.rows(); ++j) {
            double cosine = 0;
            for (std::size_t c = 0; c < a.cols(); ++c) cosine += a(i, c) * a(j, c);
            if (s.patch_depths[0][i] != s.patch_depths[0][j]) { EXPECT_LT(cosine, 1.0 - 1e-6); }
        }
    }
}

TEST(Synth, RejectsBadArguments) {
    const auto spec = small_spec();
    EXPECT_THROW(synth_generate(0, spec, 0, 0.1), ParameterError);
    EXPECT_THROW(synth_generate(0, spec, 1, 1.0), ParameterError);
    auto odd = spec;
    odd.img_w = 43;
    EXPECT_THROW(synth_generate(0, odd, 1, 0.1), ParameterError);
}

TEST(Pceb, RoundTripIsIdentityOnBytes) {
    const auto s = synth_generate(7, small_spec(), 3, 0.2);
    const Bytes bytes = encode_pceb(s.data);
    const Dataset back = decode_pceb(bytes);
    EXPECT_EQ(back.spec, s.data.spec);
    EXPECT_EQ(back.frames.size(), 3u);
    EXPECT_EQ(back.frames[1].patches, s.data.frames[1].patches);
    EXPECT_EQ(encode_pceb(back), bytes);

    const auto path = std::filesystem::temp_directory_path() / "clipdepth_test_roundtrip.pceb";
    write_pceb(path, s.data);
    EXPECT_EQ(encode_pceb(read_pceb(path)), bytes);
    std::filesystem::remove(path);
}

TEST(Pceb, HeaderLayout) {
    SynthOptions opt;
    opt.flipped = false;
    const auto s = synth_generate(7, small_spec(), 1, 0.2, opt);
    const Bytes b = encode_pceb(s.data);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "PCEB");
    EXPECT_EQ(b[4], 1);       // version
    EXPECT_EQ(b[8], 2);       // flags: pixel depth only
    EXPECT_EQ(b[12], 6);      // D
    const std::size_t frame = 4 * (9 * 6 + 6 + 42 * 42);
    EXPECT_EQ(b.size(), 56 + frame);
}

TEST(Pceb, CorruptionIsReported) {
    const auto s = synth_generate(7, small_spec(), 2, 0.2);
    const Bytes good = encode_pceb(s.data);

    Bytes bad_magic = good;
    bad_magic[0] = 'X';
    try {
        decode_pceb(bad_magic);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::bad_magic);
        EXPECT_EQ(e.offset(), 0u);
    }

    Bytes bad_version = good;
    bad_version[4] = 9;
    try {
        decode_pceb(bad_version);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::bad_version);
        EXPECT_EQ(e.offset(), 4u);
    }

    const std::size_t frame = (good.size() - 56) / 2;
    Bytes truncated(good.begin(), good.begin() + 56 + frame + frame / 2);
    try {
        decode_pceb(truncated);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::truncated);
        EXPECT_EQ(e.offset(), 56 + frame);
    }

    Bytes header_only(good.begin(), good.begin() + 20);
    try {
        decode_pceb(header_only);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::truncated);
    }

    Bytes trailing = good;
    trailing.push_back(0);
    EXPECT_THROW(decode_pceb(trailing), ParseError);
}

TEST(Pctb, RoundTripAndErrors) {
    TableInit t;
    t.vectors = Matrix<float>{{1, 0, 0}, {0, 1, 0}};
    t.centers = {0.5f, 1.5f};
    const Bytes b = encode_pctb(t);
    const auto back = decode_pctb(b);
    EXPECT_EQ(back.vectors, t.vectors);
    EXPECT_EQ(back.centers, t.centers);
    EXPECT_EQ(encode_pctb(back), b);
    Bytes cut(b.begin(), b.end() - 2);
    EXPECT_THROW(decode_pctb(cut), ParseError);
}

TEST(Tiles, KittiGridSplitsIntoFourSquares) {
    const GridShape shape{24, 96};
    Matrix<float> cells(shape.cells(), 2);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<float>(i);
    const auto tiles = tile_split(cells, shape);
    ASSERT_EQ(tiles.size(), 4u);
    for (const auto& t : tiles) EXPECT_EQ(t.rows(), 24u * 24u);
    // patch (row 3, col 30) is tile 1, local col 6
    EXPECT_EQ(tiles[1].row(3 * 24 + 6)[0], cells.row(3 * 96 + 30)[0]);
    EXPECT_EQ(tile_merge(tiles, 24), cells);
    EXPECT_THROW(tile_split(Matrix<float>(24 * 25, 1), GridShape{24, 25}), ShapeError);

    Matrix<float> map(24, 96);
    for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<float>(i);
    EXPECT_EQ(tile_merge_map(tile_split_map(map)), map);
}

TEST(Hflip, ColumnsReverse) {
    EXPECT_EQ(hflip(Matrix<int>{{1, 2, 3}}), (Matrix<int>{{3, 2, 1}}));
    const Matrix<int> m{{1, 2}, {3, 4}, {5, 6}};
    EXPECT_EQ(hflip(hflip(m)), m);
    const Matrix<int> col{{1}, {2}};
    EXPECT_EQ(hflip(col), col);
    Matrix<float> cells{{1, 1}, {2, 2}, {3, 3}, {4, 4}};
    EXPECT_EQ(hflip_cells(cells, GridShape{2, 2}), (Matrix<float>{{2, 2}, {1, 1}, {4, 4}, {3, 3}}));
}
