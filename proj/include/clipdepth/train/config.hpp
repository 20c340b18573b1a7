#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>

#include "clipdepth/errors.hpp"
#include "clipdepth/eval/crop.hpp"
#include "clipdepth/head/model.hpp"

namespace clipdepth {

enum class Phase : std::uint32_t { embedding = 0, depth = 1 };

/// Which objectives train the model. The two reduced sets run the embedding
/// phase only (no alternation).
enum class LossSet { infonce, infonce_align, all };

inline LossSet parse_loss_set(std::string_view s) {
    if (s == "infonce") return LossSet::infonce;
    if (s == "infonce+align") return LossSet::infonce_align;
    if (s == "all") return LossSet::all;
    throw ParameterError("unknown loss set \"" + std::string(s) + "\" (expected infonce, infonce+align, all)");
}

inline std::string_view loss_set_name(LossSet s) {
    switch (s) {
    case LossSet::infonce: return "infonce";
    case LossSet::infonce_align: return "infonce+align";
    default: return "all";
    }
}

struct TrainConfig {
    std::uint32_t alternation_period = 100;
    std::uint32_t batch_size = 8;
    double emb_lr = 3e-4;
    double emb_wd = 1e-2;
    double depth_lr = 1e-3;
    double depth_wd = 0.0;
    double lambda_infonce = 1.0;
    std::uint32_t patience = 50;
    std::uint32_t decay_start = 20;
    double decay_floor = 0.1;
    std::uint64_t seed = 0;
    bool freeze_mlps = false;
    LossSet loss_set = LossSet::all;
    CropSpec crop = CropSpec::none();

    void validate() const {
        if (alternation_period < 1) throw ParameterError("alternation period must be at least 1");
        if (batch_size < 1) throw ParameterError("batch size must be at least 1");
        if (!(emb_lr >= 0.0) || !(depth_lr >= 0.0)) throw ParameterError("learning rates must be non-negative");
        if (!(emb_wd >= 0.0) || !(depth_wd >= 0.0)) throw ParameterError("weight decay must be non-negative");
        if (!(decay_start > 0 && decay_start < patience)) {
            throw ParameterError("require 0 < decay_start < patience");
        }
        if (!(decay_floor >= 0.0 && decay_floor <= 1.0)) throw ParameterError("decay floor must lie in [0, 1]");
    }

    /// Canonical text used for the checkpoint config hash.
    std::string canonical(const ModelConfig& m) const {
        std::ostringstream os;
        os.precision(17);
        os << "dim=" << m.dim << "\nhidden=" << m.hidden_width() << "\nbins=" << m.bins << "\ntau=" << m.tau
           << "\ndropout=" << m.dropout << "\nuse_cls=" << m.use_cls << "\nrange_min=" << m.range_min
           << "\nrange_max=" << m.range_max << "\nperiod=" << alternation_period << "\nbatch_size=" << batch_size
           << "\nemb_lr=" << emb_lr << "\nemb_wd=" << emb_wd << "\ndepth_lr=" << depth_lr << "\ndepth_wd=" << depth_wd
           << "\nlambda_infonce=" << lambda_infonce << "\npatience=" << patience << "\ndecay_start=" << decay_start
           << "\ndecay_floor=" << decay_floor << "\nseed=" << seed << "\nfreeze_mlps=" << freeze_mlps
           << "\nlosses=" << loss_set_name(loss_set) << "\ncrop=" << crop.name() << '\n';
        return os.str();
    }
};

/// Embedding for steps [0, period), depth for [period, 2 period), repeating.
inline Phase phase_for_step(std::uint64_t step, std::uint64_t period) {
    if (period == 0) throw ParameterError("alternation period must be at least 1");
    return (step / period) % 2 == 0 ? Phase::embedding : Phase::depth;
}

/// Constant until the stall counter reaches decay_start, then linear down to
/// floor * lr0 at patience, constant afterwards.
inline double lr_schedule(std::uint64_t stall, double lr0, std::uint64_t decay_start = 20, std::uint64_t patience = 50,
                          double floor = 0.1) {
    if (stall <= decay_start) return lr0;
    if (stall >= patience) return floor * lr0;
    const double progress = static_cast<double>(stall - decay_start) / static_cast<double>(patience - decay_start);
    return lr0 * (1.0 - (1.0 - floor) * progress);
}

} // namespace clipdepth
