#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "clipdepth/adamw.hpp"
#include "clipdepth/dataio/bins.hpp"
#include "clipdepth/dataio/patch_target.hpp"
#include "clipdepth/eval/evaluate.hpp"
#include "clipdepth/eval/report.hpp"
#include "clipdepth/head/model.hpp"
#include "clipdepth/losses.hpp"
#include "clipdepth/train/checkpoint.hpp"
#include "clipdepth/train/config.hpp"

namespace clipdepth {

/// A training frame with its patch supervision precomputed.
struct PreparedFrame {
    const EmbeddingFrame* frame = nullptr;
    std::vector<float> depth;
    std::vector<std::size_t> bins;
    std::vector<std::uint8_t> mask;
};

inline std::vector<PreparedFrame> prepare_frames(const Dataset& ds, const CropSpec& crop) {
    const auto centers = bin_centers(ds.spec.range_min, ds.spec.range_max, ds.spec.bins);
    const auto keep = crop_keep(crop, ds.spec.img_h, ds.spec.img_w);
    std::vector<PreparedFrame> out;
    out.reserve(ds.frames.size());
    for (const auto& f : ds.frames) {
        PreparedFrame p;
        p.frame = &f;
        for (const auto& t : frame_patch_targets(f, ds.spec, centers, &keep)) {
            p.depth.push_back(static_cast<float>(t.depth));
            p.bins.push_back(t.bin.value_or(0));
            p.mask.push_back(t.valid ? 1 : 0);
        }
        out.push_back(std::move(p));
    }
    return out;
}

inline constexpr std::array<const char*, 6> kMetricNames = {"abs_rel", "rmse", "log10", "d1", "d2", "d3"};

inline std::array<double, 6> metric_values(const MetricReport& r) {
    return {r.abs_rel, r.rmse, r.log10, r.delta1, r.delta2, r.delta3};
}

inline bool metric_improves(std::size_t index, double candidate, double best) {
    return index < 3 ? candidate < best : candidate > best;
}

struct BestRecord {
    double value = std::nan("");
    std::uint64_t epoch = 0;
    std::filesystem::path checkpoint;
    bool set() const { return !std::isnan(value); }
};

struct TrainState {
    std::uint64_t global_step = 0;
    std::uint64_t epoch = 0;
    std::uint64_t stall_counter = 0;
    std::array<BestRecord, 6> best;
};

struct StepResult {
    Phase phase = Phase::embedding;
    double loss = 0.0;
    std::size_t n_valid = 0;
    bool skipped = false; // batch had no valid patch; no optimizer step taken
};

struct ValidationOutcome {
    MetricReport report;
    std::vector<std::size_t> improved; // metric indices
    bool stop = false;
};

struct FitOptions {
    std::uint64_t max_steps = 0;  // 0 = unlimited
    std::uint64_t max_epochs = 0; // 0 = until early stop
    std::filesystem::path checkpoint_dir; // empty = keep in memory only
    std::ostream* log = nullptr;
    EvalOptions eval{CropSpec::none(), Tta::on, false};
    std::function<void(const class Trainer&, const StepResult&)> on_step;
};

struct FitResult {
    std::uint64_t steps = 0;
    std::uint64_t epochs = 0;
    bool early_stopped = false;
    MetricReport last;
};

class Trainer {
public:
    Trainer(TrainConfig config, Model<float> model) : config_(config), model_(std::move(model)) {
        config_.validate();
        for (auto& [name, p] : model_.named_params()) {
            emb_opt_.emplace(name, AdamWState<float>::for_param(*p, config_.emb_lr, config_.emb_wd));
            if (name != "table.weights") {
                depth_opt_.emplace(name, AdamWState<float>::for_param(*p, config_.depth_lr, config_.depth_wd));
            }
        }
    }

    const TrainConfig& config() const noexcept { return config_; }
    const Model<float>& model() const noexcept { return model_; }
    Model<float>& model() noexcept { return model_; }
    const TrainState& state() const noexcept { return state_; }

    Phase current_phase() const {
        if (config_.loss_set != LossSet::all) return Phase::embedding;
        return phase_for_step(state_.global_step, config_.alternation_period);
    }

    double emb_lr() const {
        return lr_schedule(state_.stall_counter, config_.emb_lr, config_.decay_start, config_.patience,
                           config_.decay_floor);
    }
    double depth_lr() const {
        return lr_schedule(state_.stall_counter, config_.depth_lr, config_.decay_start, config_.patience,
                           config_.decay_floor);
    }

    /// One forward/backward/update on the concatenated patches of `batch`.
    StepResult train_step(std::span<const PreparedFrame* const> batch) {
        if (batch.empty()) throw ParameterError("train_step: empty batch");
        const std::size_t d = model_.config.dim;
        std::size_t n = 0;
        for (const auto* f : batch) {
            if (f->frame->patches.cols() != d) throw ShapeError("train_step: frame width differs from model");
            n += f->frame->patches.rows();
        }
        Matrix<float> patches(n, d);
        Matrix<float> cls_rows(model_.head.use_cls ? n : 0, d);
        std::vector<float> depth;
        std::vector<std::size_t> bins;
        std::vector<std::uint8_t> mask;
        depth.reserve(n);
        bins.reserve(n);
        mask.reserve(n);
        std::size_t row = 0;
        for (const auto* f : batch) {
            const auto& fr = *f->frame;
            for (std::size_t r = 0; r < fr.patches.rows(); ++r, ++row) {
                std::copy(fr.patches.row(r).begin(), fr.patches.row(r).end(), patches.row(row).begin());
                if (model_.head.use_cls) std::copy(fr.cls.row(0).begin(), fr.cls.row(0).end(), cls_rows.row(row).begin());
            }
            depth.insert(depth.end(), f->depth.begin(), f->depth.end());
            bins.insert(bins.end(), f->bins.begin(), f->bins.end());
            mask.insert(mask.end(), f->mask.begin(), f->mask.end());
        }

        StepResult result;
        result.phase = current_phase();
        result.n_valid = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
        if (result.n_valid == 0) {
            result.skipped = true;
            return result;
        }

        std::mt19937_64 rng(step_seed());
        typename RotationHead<float>::Cache cache;
        const Matrix<float> z = model_.head.forward(patches, cls_rows, Mode::train, rng, &cache);

        LossBundle<float> loss;
        if (result.phase == Phase::depth) {
            loss = depth_rmse_loss(z, model_.table, std::span<const float>(depth), std::span<const std::uint8_t>(mask));
        } else if (config_.loss_set == LossSet::infonce) {
            loss = info_nce(z, model_.table, std::span<const std::size_t>(bins), std::span<const std::uint8_t>(mask));
            loss.scale(static_cast<float>(config_.lambda_infonce));
        } else {
            loss = emb_loss(z, model_.table, std::span<const std::size_t>(bins), std::span<const std::uint8_t>(mask),
                            static_cast<float>(config_.lambda_infonce));
        }
        if (!std::isfinite(loss.value)) {
            throw EvaluationError("non-finite training loss at step " + std::to_string(state_.global_step) + " (" +
                                  (result.phase == Phase::depth ? "depth" : "embedding") + " phase)");
        }
        result.loss = loss.value;

        model_.zero_grad();
        if (!config_.freeze_mlps) model_.head.backward(cache, loss.grad_z);
        model_.table.weights.grad = std::move(loss.grad_weights);

        if (result.phase == Phase::embedding) {
            const double lr = emb_lr();
            for (auto& [name, p] : model_.named_params()) {
                const bool is_table = name == "table.weights";
                if (!is_table && config_.freeze_mlps) continue;
                auto& st = emb_opt_.at(name);
                st.lr = lr;
                adamw_step(*p, st);
            }
            model_.table.normalize();
        } else if (!config_.freeze_mlps) {
            const double lr = depth_lr();
            for (auto& [name, p] : model_.head.named_params()) {
                auto& st = depth_opt_.at(name);
                st.lr = lr;
                adamw_step(*p, st);
            }
        }
        model_.zero_grad();
        ++state_.global_step;
        return result;
    }

    /// Metrics on the validation set, best tracking, checkpointing and the stall counter.
    ValidationOutcome validate_epoch(const Dataset& val, const EvalOptions& opt,
                                     const std::filesystem::path& checkpoint_dir = {}) {
        if (val.frames.empty()) throw ParameterError("validation set is empty");
        ValidationOutcome out;
        out.report = evaluate_dataset(val, model_, opt);
        const auto values = metric_values(out.report);
        for (std::size_t i = 0; i < values.size(); ++i) {
            auto& best = state_.best[i];
            if (best.set() && !metric_improves(i, values[i], best.value)) continue;
            best.value = values[i];
            best.epoch = state_.epoch;
            out.improved.push_back(i);
        }
        if (out.improved.empty()) {
            ++state_.stall_counter;
        } else {
            state_.stall_counter = 0;
        }
        if (!checkpoint_dir.empty() && !out.improved.empty()) {
            std::filesystem::create_directories(checkpoint_dir);
            const Bytes bytes = encode_checkpoint(checkpoint());
            for (std::size_t i : out.improved) {
                auto path = checkpoint_dir / (std::string("best_") + kMetricNames[i] + ".pckp");
                write_file_bytes(path, bytes);
                state_.best[i].checkpoint = path;
            }
        }
        out.stop = state_.stall_counter >= config_.patience;
        return out;
    }

    /// Epoch loop: shuffled batches, validation after each epoch, early stopping.
    FitResult fit(const Dataset& train, const Dataset& val, const FitOptions& opt) {
        if (train.frames.empty()) throw ParameterError("training set is empty");
        const auto prepared = prepare_frames(train, config_.crop);
        std::vector<std::size_t> order(prepared.size());
        FitResult result;
        const std::uint64_t start_step = state_.global_step;
        auto budget_left = [&] { return opt.max_steps == 0 || state_.global_step - start_step < opt.max_steps; };
        while (budget_left() && (opt.max_epochs == 0 || result.epochs < opt.max_epochs)) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 shuffle_rng(config_.seed ^ (0x9e3779b97f4a7c15ull * (state_.epoch + 1)));
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            std::vector<const PreparedFrame*> batch;
            for (std::size_t i = 0; i < order.size() && budget_left(); i += config_.batch_size) {
                batch.clear();
                for (std::size_t j = i; j < std::min(order.size(), i + config_.batch_size); ++j) {
                    batch.push_back(&prepared[order[j]]);
                }
                const auto step = train_step(batch);
                if (opt.on_step) opt.on_step(*this, step);
            }
            ++state_.epoch;
            ++result.epochs;
            const auto v = validate_epoch(val, opt.eval, opt.checkpoint_dir);
            result.last = v.report;
            if (opt.log) *opt.log << metrics_log_line(v.report) << '\n';
            if (v.stop) {
                result.early_stopped = true;
                break;
            }
        }
        result.steps = state_.global_step - start_step;
        return result;
    }

    std::string metrics_log_line(const MetricReport& r) const {
        std::ostringstream os;
        char lr_buf[64];
        os << "epoch " << state_.epoch << " abs_rel " << format_real(r.abs_rel) << " rmse " << format_real(r.rmse)
           << " log10 " << format_real(r.log10) << " d1 " << format_real(r.delta1) << " d2 " << format_real(r.delta2)
           << " d3 " << format_real(r.delta3) << " stall " << state_.stall_counter;
        std::snprintf(lr_buf, sizeof lr_buf, " lr_emb %.6g lr_depth %.6g", emb_lr(), depth_lr());
        os << lr_buf;
        return os.str();
    }

    ConfigHash config_hash() const { return sha256(config_.canonical(model_.config)); }

    /// Parameters, both optimizer states and the scalar training state.
    Checkpoint checkpoint() const {
        Checkpoint c;
        c.config_hash = config_hash();
        store_model(c, model_);
        for (const auto& [name, st] : emb_opt_) {
            c.add("opt.emb." + name + ".m", st.m);
            c.add("opt.emb." + name + ".v", st.v);
            c.set("opt.emb." + name + ".t", static_cast<double>(st.t));
        }
        for (const auto& [name, st] : depth_opt_) {
            c.add("opt.depth." + name + ".m", st.m);
            c.add("opt.depth." + name + ".v", st.v);
            c.set("opt.depth." + name + ".t", static_cast<double>(st.t));
        }
        c.set("state.global_step", static_cast<double>(state_.global_step));
        c.set("state.epoch", static_cast<double>(state_.epoch));
        c.set("state.stall_counter", static_cast<double>(state_.stall_counter));
        for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
            c.set(std::string("state.best.") + kMetricNames[i] + ".value", state_.best[i].value);
            c.set(std::string("state.best.") + kMetricNames[i] + ".epoch", static_cast<double>(state_.best[i].epoch));
        }
        return c;
    }

    /// Restores a checkpoint written by a trainer with the same shapes.
    void restore(const Checkpoint& c) {
        restore_model(c, model_);
        auto load_opt = [&](std::map<std::string, AdamWState<float>>& opts, const std::string& prefix) {
            for (auto& [name, st] : opts) {
                const auto* m = c.find(prefix + name + ".m");
                const auto* v = c.find(prefix + name + ".v");
                if (!m || !v || !m->same_shape(st.m) || !v->same_shape(st.v)) {
                    throw CheckpointError("checkpoint optimizer state for " + name + " is missing or misshapen");
                }
                st.m = *m;
                st.v = *v;
                st.t = static_cast<std::uint64_t>(c.require(prefix + name + ".t"));
            }
        };
        load_opt(emb_opt_, "opt.emb.");
        load_opt(depth_opt_, "opt.depth.");
        state_.global_step = static_cast<std::uint64_t>(c.require("state.global_step"));
        state_.epoch = static_cast<std::uint64_t>(c.require("state.epoch"));
        state_.stall_counter = static_cast<std::uint64_t>(c.require("state.stall_counter"));
        for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
            state_.best[i].value = c.require(std::string("state.best.") + kMetricNames[i] + ".value");
            state_.best[i].epoch =
                static_cast<std::uint64_t>(c.require(std::string("state.best.") + kMetricNames[i] + ".epoch"));
        }
    }

private:
    std::uint64_t step_seed() const {
        // splitmix64 of (seed, step) so dropout masks depend only on those two
        std::uint64_t x = config_.seed + 0x9e3779b97f4a7c15ull * (state_.global_step + 1);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    TrainConfig config_;
    Model<float> model_;
    TrainState state_;
    std::map<std::string, AdamWState<float>> emb_opt_;
    std::map<std::string, AdamWState<float>> depth_opt_;
};

} // namespace clipdepth
