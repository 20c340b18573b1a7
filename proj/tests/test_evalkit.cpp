#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/synth.hpp"
#include "clipdepth/eval/analysis.hpp"
#include "clipdepth/eval/crop.hpp"
#include "clipdepth/eval/evaluate.hpp"
#include "clipdepth/eval/metrics.hpp"
#include "clipdepth/eval/reconstruct.hpp"
#include "clipdepth/eval/report.hpp"
#include "clipdepth/head/model.hpp"

using namespace clipdepth;

namespace {

Matrix<double> random_depth(std::size_t h, std::size_t w, std::uint64_t seed, double lo = 0.5, double hi = 9.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix<double> m(h, w);
    for (auto& v : m.values()) v = u(rng);
    return m;
}

std::size_t count_true(const Matrix<std::uint8_t>& m) {
    std::size_t n = 0;
    for (auto v : m.values()) n += v;
    return n;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST(Metrics, PerfectPrediction) {
    const auto gt = random_depth(20, 30, 1);
    const auto r = compute_metrics(gt, gt, nullptr, 0.001, 10.0);
    EXPECT_EQ(r.abs_rel, 0.0);
    EXPECT_EQ(r.rmse, 0.0);
    EXPECT_EQ(r.log10, 0.0);
    EXPECT_EQ(r.delta1, 1.0);
    EXPECT_EQ(r.delta2, 1.0);
    EXPECT_EQ(r.delta3, 1.0);
    EXPECT_EQ(r.n_pixels, 600u);
}

TEST(Metrics, ConstantRatio) {
    const auto gt = random_depth(20, 30, 2);
    Matrix<double> pred = gt;
    for (auto& v : pred.values()) v *= 1.3;
    const auto r = compute_metrics(pred, gt, nullptr, 0.001, 20.0);
    EXPECT_NEAR(r.abs_rel, 0.3, 1e-9);
    EXPECT_NEAR(r.log10, std::log10(1.3), 1e-12);
    EXPECT_NEAR(r.log10, 0.11394, 1e-5);
    EXPECT_EQ(r.delta1, 0.0);
    EXPECT_EQ(r.delta2, 1.0);
    EXPECT_EQ(r.delta3, 1.0);
}

TEST(Metrics, ValidPixelSet) {
    Matrix<double> gt{{1.0, std::nan(""), 12.0, 0.0, 2.0}};
    Matrix<double> pred{{1.0, 5.0, 5.0, 5.0, 4.0}};
    Matrix<std::uint8_t> mask{{1, 1, 1, 1, 0}};
    const auto r = compute_metrics(pred, gt, &mask, 0.001, 10.0);
    EXPECT_EQ(r.n_pixels, 1u);
    EXPECT_EQ(r.rmse, 0.0);
    Matrix<std::uint8_t> none(1, 5, 0);
    EXPECT_THROW(compute_metrics(pred, gt, &none, 0.001, 10.0), EvaluationError);
    EXPECT_THROW(compute_metrics(Matrix<double>(2, 2), gt, nullptr, 0.001, 10.0), ShapeError);
}

TEST(Metrics, ScaleEquivarianceAndOrdering) {
    const auto gt = random_depth(16, 16, 3, 1.0, 5.0);
    const auto pred = random_depth(16, 16, 4, 1.0, 5.0);
    const auto base = compute_metrics(pred, gt, nullptr, 0.001, 100.0);
    EXPECT_LE(base.delta1, base.delta2);
    EXPECT_LE(base.delta2, base.delta3);
    for (double a : {0.5, 3.0, 7.25}) {
        Matrix<double> gp = gt, pp = pred;
        for (auto& v : gp.values()) v *= a;
        for (auto& v : pp.values()) v *= a;
        const auto r = compute_metrics(pp, gp, nullptr, 0.001, 100.0);
        EXPECT_NEAR(r.abs_rel, base.abs_rel, 1e-12);
        EXPECT_NEAR(r.log10, base.log10, 1e-12);
        EXPECT_NEAR(r.rmse, a * base.rmse, 1e-12);
        EXPECT_EQ(r.delta1, base.delta1);
        EXPECT_EQ(r.delta2, base.delta2);
        EXPECT_EQ(r.delta3, base.delta3);
    }
}

TEST(Metrics, MaskedPixelsNeverMatter) {
    const auto gt = random_depth(10, 10, 5);
    auto pred = random_depth(10, 10, 6);
    Matrix<std::uint8_t> mask(10, 10, 1);
    for (std::size_t x = 0; x < 10; ++x) mask(0, x) = 0;
    const auto a = compute_metrics(pred, gt, &mask, 0.001, 10.0);
    for (std::size_t x = 0; x < 10; ++x) pred(0, x) = 1e6;
    const auto b = compute_metrics(pred, gt, &mask, 0.001, 10.0);
    EXPECT_EQ(format_report(a), format_report(b));
}

TEST(Metrics, StrictThreshold) {
    Matrix<double> gt{{1.0}};
    Matrix<double> pred{{1.25}};
    EXPECT_EQ(compute_metrics(pred, gt, nullptr, 0.001, 10.0).delta1, 0.0);
}

TEST(Metrics, PoolsPixelsAcrossFrames) {
    MetricAccumulator acc;
    accumulate_metrics(acc, Matrix<double>{{2.0}}, Matrix<double>{{1.0}}, nullptr, 0.001, 10.0);
    accumulate_metrics(acc, Matrix<double>(1, 3, 1.0), Matrix<double>(1, 3, 1.0), nullptr, 0.001, 10.0);
    EXPECT_NEAR(acc.report().abs_rel, 0.25, 1e-15);
}

TEST(Crop, Regions) {
    EXPECT_EQ(count_true(crop_mask(CropSpec::none(), 7, 9)), 63u);
    const auto eigen = crop_mask(CropSpec::eigen(), 480, 640);
    EXPECT_EQ(count_true(eigen), 426u * 560u);
    EXPECT_EQ(eigen(45, 41), 1);
    EXPECT_EQ(eigen(44, 41), 0);
    EXPECT_EQ(eigen(470, 600), 1);
    EXPECT_EQ(eigen(471, 600), 0);

    auto rows = [](const Matrix<std::uint8_t>& m) {
        std::size_t n = 0;
        for (std::size_t y = 0; y < m.rows(); ++y) {
            bool any = false;
            for (std::size_t x = 0; x < m.cols(); ++x) any = any || m(y, x);
            n += any;
        }
        return n;
    };
    for (std::size_t h : {100u, 352u, 375u}) {
        const auto a = crop_mask(CropSpec::garg(), h, 1242);
        const auto b = crop_mask(CropSpec::garg(), 2 * h, 1242);
        EXPECT_NEAR(static_cast<double>(rows(b)), 2.0 * rows(a), 1.0);
    }
    EXPECT_EQ(CropSpec::parse("garg").name(), "garg");
    EXPECT_THROW(CropSpec::parse("center"), ParameterError);
}

TEST(Upsample, Examples) {
    const Matrix<float> constant(3, 4, 2.5f);
    for (float v : upsample_to_pixels(constant, 42, 56, 100, 77).values()) EXPECT_FLOAT_EQ(v, 2.5f);
    for (float v : upsample_to_pixels(Matrix<float>{{4.0f}}, 14, 14, 30, 40).values()) EXPECT_FLOAT_EQ(v, 4.0f);
    const Matrix<float> g{{1, 2}, {3, 4}};
    const auto blocks = upsample_to_pixels(g, 28, 28, 28, 28);
    EXPECT_EQ(blocks(0, 0), 1.0f);
    EXPECT_EQ(blocks(13, 13), 1.0f);
    EXPECT_EQ(blocks(0, 14), 2.0f);
    EXPECT_EQ(blocks(27, 27), 4.0f);
    EXPECT_THROW(upsample_to_pixels(g, 27, 28, 28, 28), ShapeError);
    // halving resolution averages 2x2 pixel pairs exactly at half-pixel centers
    const auto half = upsample_to_pixels(g, 28, 28, 14, 14);
    EXPECT_FLOAT_EQ(half(0, 0), 1.0f);
    EXPECT_FLOAT_EQ(half(13, 13), 4.0f);
}

TEST(TtaAndMerge, Examples) {
    const Matrix<float> a{{1, 2}, {3, 4}};
    EXPECT_EQ(tta_and_merge(std::vector{a}), a);
    const std::vector flipped{hflip(a)};
    EXPECT_EQ(tta_and_merge(std::vector{a}, &flipped), a);
    const Matrix<float> b{{5, 7}, {9, 11}};
    const std::vector fb{hflip(b)};
    EXPECT_EQ(tta_and_merge(std::vector{a}, &fb), (Matrix<float>{{3, 4.5}, {6, 7.5}}));

    std::vector<Matrix<float>> tiles(4, Matrix<float>(24, 24));
    for (std::size_t t = 0; t < 4; ++t) tiles[t].fill(static_cast<float>(t));
    const auto merged = tta_and_merge(tiles);
    EXPECT_EQ(merged.rows(), 24u);
    EXPECT_EQ(merged.cols(), 96u);
    EXPECT_EQ(merged(5, 50), 2.0f);
    const std::vector<Matrix<float>> three(3, Matrix<float>(24, 24));
    EXPECT_THROW(tta_and_merge(tiles, &three), ShapeError);
}

TEST(Analysis, DiagonalAndMarginals) {
    const auto edges = bin_edges(0, 10, 15);
    std::vector<double> gt, pred;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 500; ++i) gt.push_back(u(rng));
    const auto same = analysis_tables(gt, gt, edges);
    for (std::size_t r = 0; r < same.gt_bins.size(); ++r) {
        for (std::size_t p = 0; p < 15; ++p) {
            if (p != same.gt_bins[r]) { EXPECT_EQ(same.joint(r, p), 0u); }
        }
        EXPECT_EQ(same.joint(r, same.gt_bins[r]), same.gt_hist[r]);
    }

    std::normal_distribution<double> noise(0.0, 0.8);
    for (double g : gt) pred.push_back(g + noise(rng));
    const auto t = analysis_tables(gt, pred, edges, {0});
    ASSERT_EQ(t.gt_bins.size(), 14u);
    EXPECT_EQ(t.gt_bins.front(), 1u);
    for (std::size_t r = 0; r < t.gt_bins.size(); ++r) {
        std::size_t sum = 0;
        for (std::size_t p = 0; p < 15; ++p) sum += t.joint(r, p);
        EXPECT_EQ(sum, t.gt_hist[r]);
        EXPECT_GE(t.sigma[r], 0.0);
    }
    EXPECT_THROW(analysis_tables({}, {}, edges), EvaluationError);
    const std::vector<double> bad{0.0, 2.0, 1.0};
    EXPECT_THROW(analysis_tables(gt, gt, bad), ParameterError);
}

TEST(Analysis, SigmaMatchesDirectComputation) {
    const std::vector<double> edges{0.0, 1.0, 2.0};
    const std::vector<double> gt{0.5, 0.5, 0.5, 1.5};
    const std::vector<double> pred{0.2, 0.4, 0.9, 1.5};
    const auto t = analysis_tables(gt, pred, edges);
    const double mean = 0.5;
    const double sd = std::sqrt(((0.3 * 0.3) + (0.1 * 0.1) + (0.4 * 0.4)) / 3.0);
    EXPECT_NEAR(t.mean_pred[0], mean, 1e-12);
    EXPECT_NEAR(t.sigma[0], sd, 1e-12);
    EXPECT_EQ(t.sigma[1], 0.0);
}

TEST(Report, KeysAndCsv) {
    MetricReport r{0.1, 0.2, 0.03, 0.9, 0.95, 0.99, 12};
    const auto text = format_report(r);
    for (const char* k : {"abs_rel = ", "rmse = ", "log10 = ", "d1 = ", "d2 = ", "d3 = ", "n_pixels = 12"}) {
        EXPECT_NE(text.find(k), std::string::npos) << k;
    }
    const auto edges = bin_edges(0, 10, 15);
    const std::vector<double> gt{0.2, 5.1, 9.9}, pred{0.3, 5.0, 9.0};
    const auto t = analysis_tables(gt, pred, edges, {0});
    const auto dir = std::filesystem::temp_directory_path() / "clipdepth_eval_csv";
    std::filesystem::remove_all(dir);
    write_analysis_csv(dir, t);
    const auto joint = slurp(dir / "joint.csv");
    EXPECT_EQ(joint.rfind("gt_center,pred_0.333333,", 0), 0u);
    EXPECT_EQ(std::count(joint.begin(), joint.end(), '\n'), 15);
    EXPECT_EQ(slurp(dir / "gt_hist.csv").rfind("gt_lo,gt_hi,count\n0.666667,1.333333,0\n", 0), 0u);
    EXPECT_TRUE(std::filesystem::exists(dir / "sigma.csv"));
    std::filesystem::remove_all(dir);
}

TEST(Report, DepthPgm) {
    const Matrix<float> d{{0.0f, 5.0f, 10.0f}, {20.0f, -1.0f, 2.5f}};
    const Bytes b = encode_depth_pgm(d, 0.0, 10.0);
    const std::string s(b.begin(), b.end());
    EXPECT_EQ(s.rfind("P5\n# depth_m = 0.000000 + value * 0.000153\n3 2\n65535\n", 0), 0u);
    const std::size_t off = b.size() - 12;
    auto sample = [&](std::size_t i) { return (b[off + 2 * i] << 8) | b[off + 2 * i + 1]; };
    EXPECT_EQ(sample(0), 0);
    EXPECT_EQ(sample(1), 32768);
    EXPECT_EQ(sample(2), 65535);
    EXPECT_EQ(sample(3), 65535);
    EXPECT_EQ(sample(4), 0);
}

TEST(EvaluateDataset, PixelAndPatchLevel) {
    DatasetSpec spec;
    spec.dim = 8;
    spec.grid_h = 2;
    spec.grid_w = 2;
    spec.img_h = 28;
    spec.img_w = 28;
    const auto s = synth_generate(8, spec, 3, 0.1);
    ModelConfig cfg;
    cfg.dim = 8;
    const auto m = make_model<float>(cfg, 1, nullptr, 2);
    const auto pix = evaluate_dataset(s.data, m, EvalOptions{CropSpec::none(), Tta::on, false});
    const auto patch = evaluate_dataset(s.data, m, EvalOptions{CropSpec::none(), Tta::on, true});
    EXPECT_EQ(pix.n_pixels, 3u * 28 * 28);
    EXPECT_EQ(patch.n_pixels, 3u * 4);
    // synthetic depth is constant per patch, so both levels agree
    EXPECT_NEAR(pix.rmse, patch.rmse, 1e-5);
    EXPECT_NEAR(pix.abs_rel, patch.abs_rel, 1e-5);
    EXPECT_THROW(evaluate_dataset(Dataset{}, m, EvalOptions{}), ParameterError);
}
