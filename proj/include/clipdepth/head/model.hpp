#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "clipdepth/head/depth_table.hpp"
#include "clipdepth/head/rotation_head.hpp"

namespace clipdepth {

/// Architecture hyperparameters needed to rebuild a model from a checkpoint.
struct ModelConfig {
    std::uint32_t dim = 768;
    std::uint32_t hidden = 0; // 0 means hidden width = dim
    std::uint32_t bins = 15;
    double tau = 0.07;
    double dropout = 0.1;
    bool use_cls = true;
    double range_min = 0.0;
    double range_max = 10.0;

    std::uint32_t hidden_width() const noexcept { return hidden == 0 ? dim : hidden; }
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct Model {
    ModelConfig config;
    RotationHead<T> head;
    DepthTable<T> table;

    NamedParams<T> named_params() {
        auto out = head.named_params();
        out.emplace_back("table.weights", &table.weights);
        return out;
    }

    std::vector<std::pair<std::string, const Param<T>*>> named_params() const {
        std::vector<std::pair<std::string, const Param<T>*>> out;
        for (auto& [name, p] : const_cast<Model*>(this)->named_params()) out.emplace_back(name, p);
        return out;
    }

    void zero_grad() {
        for (auto& [name, p] : named_params()) p->zero_grad();
    }
};

/// Builds the head from `seed` and the table from a PCTB source or, when absent,
/// from a Gaussian seeded with `table_seed`.
template <typename T>
Model<T> make_model(const ModelConfig& cfg, std::uint64_t seed, const TableInit* table_source,
                    std::uint64_t table_seed) {
    if (cfg.dim == 0) throw ParameterError("model width must be positive");
    Model<T> m;
    m.config = cfg;
    std::mt19937_64 rng(seed);
    m.head = RotationHead<T>::init(cfg.dim, cfg.hidden_width(), cfg.use_cls, cfg.dropout, rng);
    auto centers = table_centers<T>(cfg.range_min, cfg.range_max, cfg.bins);
    if (table_source) {
        m.table = init_depth_table<T>(*table_source, cfg.bins, cfg.dim, std::move(centers), static_cast<T>(cfg.tau));
    } else {
        m.table = init_depth_table<T>(table_seed, cfg.bins, cfg.dim, std::move(centers), static_cast<T>(cfg.tau));
    }
    return m;
}

} // namespace clipdepth
