#pragma once

#include <random>

#include "clipdepth/errors.hpp"
#include "clipdepth/head/mlp.hpp"
#include "clipdepth/ops.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

/// phi rotates each patch embedding; psi fuses it with the CLS vector; the
/// result is unit-normalized.
template <typename T>
struct RotationHead {
    Mlp<T> phi;
    Mlp<T> psi;
    bool use_cls = true;

    struct Cache {
        typename Mlp<T>::Cache phi;
        typename Mlp<T>::Cache psi;
        NormalizeCache<T> norm;
    };

    std::size_t dim() const noexcept { return phi.in_width(); }

    static RotationHead init(std::size_t dim, std::size_t hidden, bool with_cls, double dropout_rate,
                             std::mt19937_64& rng) {
        RotationHead h;
        h.use_cls = with_cls;
        h.phi = Mlp<T>::init(dim, hidden, dim, dropout_rate, rng);
        h.psi = Mlp<T>::init(with_cls ? 2 * dim : dim, hidden, dim, dropout_rate, rng);
        return h;
    }

    /// `cls_rows` holds the CLS vector of each patch's frame, one row per patch.
    /// It is ignored when use_cls is false.
    Matrix<T> forward(const Matrix<T>& patches, const Matrix<T>& cls_rows, Mode mode, std::mt19937_64& rng,
                      Cache* cache = nullptr) const {
        if (patches.cols() != dim()) {
            throw ShapeError("rotate_fuse: embeddings of width " + std::to_string(patches.cols()) +
                             " for a head of width " + std::to_string(dim()));
        }
        Matrix<T> rotated = phi.forward(patches, mode, rng, cache ? &cache->phi : nullptr);
        Matrix<T> fused_in;
        if (use_cls) {
            if (!cls_rows.same_shape(patches)) throw ShapeError("rotate_fuse: CLS rows " + shape_string(cls_rows));
            fused_in = hconcat(rotated, cls_rows);
        } else {
            fused_in = std::move(rotated);
        }
        Matrix<T> fused = psi.forward(fused_in, mode, rng, cache ? &cache->psi : nullptr);
        return l2_normalize(fused, cache ? &cache->norm : nullptr);
    }

    /// Accumulates phi/psi gradients from dL/dz.
    void backward(const Cache& c, const Matrix<T>& d_unit) {
        Matrix<T> d_fused = l2_normalize_backward(c.norm, d_unit);
        Matrix<T> d_in = psi.backward(c.psi, d_fused);
        Matrix<T> d_rotated = use_cls ? column_block(d_in, 0, dim()) : std::move(d_in);
        phi.backward(c.phi, d_rotated);
    }

    NamedParams<T> named_params() {
        auto out = phi.named_params("phi");
        auto more = psi.named_params("psi");
        out.insert(out.end(), more.begin(), more.end());
        return out;
    }
};

/// Repeats a 1 x D CLS vector for `n` patches.
template <typename T>
Matrix<T> repeat_rows(const Matrix<T>& row, std::size_t n) {
    Matrix<T> out(n, row.cols());
    for (std::size_t r = 0; r < n; ++r) std::copy(row.row(0).begin(), row.row(0).end(), out.row(r).begin());
    return out;
}

} // namespace clipdepth
