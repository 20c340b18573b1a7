#pragma once

// PCKP checkpoint: "PCKP" | u32 version | 32-byte config hash (SHA-256 of the
// canonical config text) | u32 section count | sections {name, u32 rows, u32 cols,
// f32 data} | u32 scalar count | scalars {name, f64}. Names are u32-length-prefixed.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "clipdepth/dataio/binary_io.hpp"
#include "clipdepth/errors.hpp"
#include "clipdepth/head/model.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using ConfigHash = std::array<std::uint8_t, 32>;

inline ConfigHash sha256(std::string_view text) {
    ConfigHash out{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
        throw Error("sha256 failed");
    }
    return out;
}

struct Checkpoint {
    struct Section {
        std::string name;
        Matrix<float> data;
    };
    ConfigHash config_hash{};
    std::vector<Section> sections;
    std::vector<std::pair<std::string, double>> scalars;

    void add(std::string name, const Matrix<float>& m) { sections.push_back({std::move(name), m}); }
    void set(std::string name, double v) { scalars.emplace_back(std::move(name), v); }

    const Matrix<float>* find(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s.data;
        return nullptr;
    }
    std::optional<double> scalar(std::string_view name) const {
        for (const auto& [k, v] : scalars)
            if (k == name) return v;
        return std::nullopt;
    }
    double require(std::string_view name) const {
        const auto v = scalar(name);
        if (!v) throw CheckpointError("checkpoint lacks scalar " + std::string(name));
        return *v;
    }
};

inline Bytes encode_checkpoint(const Checkpoint& c) {
    ByteWriter w;
    w.put_tag("PCKP");
    w.put_u32(kCheckpointVersion);
    w.put_bytes(c.config_hash);
    w.put_u32(static_cast<std::uint32_t>(c.sections.size()));
    for (const auto& s : c.sections) {
        w.put_string(s.name);
        w.put_u32(static_cast<std::uint32_t>(s.data.rows()));
        w.put_u32(static_cast<std::uint32_t>(s.data.cols()));
        w.put_f32s(s.data.values());
    }
    w.put_u32(static_cast<std::uint32_t>(c.scalars.size()));
    for (const auto& [name, v] : c.scalars) {
        w.put_string(name);
        w.put_f64(v);
    }
    return w.take();
}

inline Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    r.expect_tag("PCKP", "checkpoint header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.get_u32("checkpoint version");
    if (version != kCheckpointVersion) {
        throw ParseError(ParseError::Kind::bad_version, version_at,
                         "checkpoint: unsupported version " + std::to_string(version));
    }
    Checkpoint c;
    r.get_bytes(c.config_hash, "checkpoint hash");
    const std::uint32_t n_sections = r.get_u32("checkpoint sections");
    for (std::uint32_t i = 0; i < n_sections; ++i) {
        Checkpoint::Section s;
        s.name = r.get_string("checkpoint section name");
        const std::size_t dims_at = r.offset();
        const std::uint32_t rows = r.get_u32("checkpoint section dims");
        const std::uint32_t cols = r.get_u32("checkpoint section dims");
        if (std::uint64_t{rows} * cols * 4 > r.remaining()) {
            throw ParseError(ParseError::Kind::truncated, dims_at + 8, "checkpoint: section " + s.name + " truncated");
        }
        s.data = Matrix<float>(rows, cols);
        r.get_f32s(s.data.values(), "checkpoint section data");
        c.sections.push_back(std::move(s));
    }
    const std::uint32_t n_scalars = r.get_u32("checkpoint scalars");
    for (std::uint32_t i = 0; i < n_scalars; ++i) {
        auto name = r.get_string("checkpoint scalar name");
        const double v = r.get_f64("checkpoint scalar");
        c.scalars.emplace_back(std::move(name), v);
    }
    if (r.remaining() != 0) throw ParseError(ParseError::Kind::invalid, r.offset(), "checkpoint: trailing bytes");
    return c;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    write_file_bytes(path, encode_checkpoint(c));
}
inline Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

inline void store_model_config(Checkpoint& c, const ModelConfig& m) {
    c.set("model.dim", m.dim);
    c.set("model.hidden", m.hidden_width());
    c.set("model.bins", m.bins);
    c.set("model.tau", m.tau);
    c.set("model.dropout", m.dropout);
    c.set("model.use_cls", m.use_cls ? 1.0 : 0.0);
    c.set("model.range_min", m.range_min);
    c.set("model.range_max", m.range_max);
}

inline ModelConfig read_model_config(const Checkpoint& c) {
    ModelConfig m;
    m.dim = static_cast<std::uint32_t>(c.require("model.dim"));
    m.hidden = static_cast<std::uint32_t>(c.require("model.hidden"));
    m.bins = static_cast<std::uint32_t>(c.require("model.bins"));
    m.tau = c.require("model.tau");
    m.dropout = c.require("model.dropout");
    m.use_cls = c.require("model.use_cls") != 0.0;
    m.range_min = c.require("model.range_min");
    m.range_max = c.require("model.range_max");
    return m;
}

/// Adds every model parameter (and the table centers) plus the architecture scalars.
inline void store_model(Checkpoint& c, const Model<float>& model) {
    store_model_config(c, model.config);
    for (auto& [name, p] : model.named_params()) c.add(name, p->value);
    c.add("table.centers", Matrix<float>::row_vector(model.table.centers));
}

/// Copies parameters from the checkpoint into `model`, which must have matching shapes.
inline void restore_model(const Checkpoint& c, Model<float>& model) {
    const ModelConfig stored = read_model_config(c);
    if (stored.dim != model.config.dim || stored.bins != model.config.bins ||
        stored.hidden_width() != model.config.hidden_width() || stored.use_cls != model.config.use_cls) {
        throw CheckpointError("checkpoint model (D=" + std::to_string(stored.dim) + ", K=" + std::to_string(stored.bins) +
                              ") does not match target model (D=" + std::to_string(model.config.dim) +
                              ", K=" + std::to_string(model.config.bins) + ")");
    }
    for (auto& [name, p] : model.named_params()) {
        const auto* m = c.find(name);
        if (!m) throw CheckpointError("checkpoint lacks tensor " + name);
        if (!m->same_shape(p->value)) {
            throw CheckpointError("tensor " + name + " is " + shape_string(*m) + ", expected " + shape_string(p->value));
        }
        p->value = *m;
        p->zero_grad();
    }
    const auto* centers = c.find("table.centers");
    if (!centers || centers->size() != model.table.bins()) throw CheckpointError("checkpoint lacks table centers");
    model.table.centers.assign(centers->values().begin(), centers->values().end());
    model.table.tau = static_cast<float>(stored.tau);
    model.config.tau = stored.tau;
    model.config.dropout = stored.dropout;
    model.config.range_min = stored.range_min;
    model.config.range_max = stored.range_max;
    model.head.phi.dropout_rate = stored.dropout;
    model.head.psi.dropout_rate = stored.dropout;
}

/// Rebuilds a standalone model from a checkpoint.
inline Model<float> load_model(const Checkpoint& c) {
    Model<float> m = make_model<float>(read_model_config(c), 0, nullptr, 0);
    restore_model(c, m);
    return m;
}

} // namespace clipdepth
