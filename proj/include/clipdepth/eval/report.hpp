#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "clipdepth/dataio/binary_io.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/eval/analysis.hpp"
#include "clipdepth/eval/metrics.hpp"

namespace clipdepth {

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// One `key = value` line per metric.
inline std::string format_report(const MetricReport& r) {
    std::ostringstream os;
    os << "abs_rel = " << format_real(r.abs_rel) << '\n'
       << "rmse = " << format_real(r.rmse) << '\n'
       << "log10 = " << format_real(r.log10) << '\n'
       << "d1 = " << format_real(r.delta1) << '\n'
       << "d2 = " << format_real(r.delta2) << '\n'
       << "d3 = " << format_real(r.delta3) << '\n'
       << "n_pixels = " << r.n_pixels << '\n';
    return os.str();
}

/// joint.csv, sigma.csv and gt_hist.csv in `dir`.
inline void write_analysis_csv(const std::filesystem::path& dir, const AnalysisTables& t) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::trunc);
        if (!f) throw DataError("cannot write " + (dir / name).string());
        return f;
    };
    auto center = [&](std::size_t b) { return 0.5 * (t.edges[b] + t.edges[b + 1]); };
    const std::size_t k = t.edges.size() - 1;
    {
        auto f = open("joint.csv");
        f << "gt_center";
        for (std::size_t p = 0; p < k; ++p) f << ",pred_" << format_real(center(p));
        f << '\n';
        for (std::size_t r = 0; r < t.gt_bins.size(); ++r) {
            f << format_real(center(t.gt_bins[r]));
            for (std::size_t p = 0; p < k; ++p) f << ',' << t.joint(r, p);
            f << '\n';
        }
    }
    {
        auto f = open("sigma.csv");
        f << "gt_lo,gt_hi,gt_center,mean_pred,sigma,count\n";
        for (std::size_t r = 0; r < t.gt_bins.size(); ++r) {
            const std::size_t b = t.gt_bins[r];
            f << format_real(t.edges[b]) << ',' << format_real(t.edges[b + 1]) << ',' << format_real(center(b)) << ','
              << format_real(t.mean_pred[r]) << ',' << format_real(t.sigma[r]) << ',' << t.gt_hist[r] << '\n';
        }
    }
    {
        auto f = open("gt_hist.csv");
        f << "gt_lo,gt_hi,count\n";
        for (std::size_t r = 0; r < t.gt_bins.size(); ++r) {
            const std::size_t b = t.gt_bins[r];
            f << format_real(t.edges[b]) << ',' << format_real(t.edges[b + 1]) << ',' << t.gt_hist[r] << '\n';
        }
    }
}

/// Binary 16-bit PGM (big-endian samples). Depth maps linearly from [d_min, d_max]
/// onto [0, 65535], clamped; the header comment records the mapping.
template <typename T>
Bytes encode_depth_pgm(const Matrix<T>& depth, double d_min, double d_max) {
    if (!(d_max > d_min)) throw ParameterError("pgm: empty depth range");
    std::ostringstream header;
    header << "P5\n# depth_m = " << format_real(d_min) << " + value * " << format_real((d_max - d_min) / 65535.0)
           << "\n" << depth.cols() << ' ' << depth.rows() << "\n65535\n";
    const std::string h = header.str();
    Bytes out(h.begin(), h.end());
    out.reserve(h.size() + depth.size() * 2);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        double v = static_cast<double>(depth[i]);
        if (!std::isfinite(v)) v = d_min;
        const double t = std::clamp((v - d_min) / (d_max - d_min), 0.0, 1.0);
        const auto q = static_cast<std::uint16_t>(std::lround(t * 65535.0));
        out.push_back(static_cast<std::uint8_t>(q >> 8));
        out.push_back(static_cast<std::uint8_t>(q & 0xff));
    }
    return out;
}

} // namespace clipdepth
