#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clipdepth/errors.hpp"

namespace clipdepth {

/// Dense row-major matrix. Batches of vectors are stored one vector per row.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw ShapeError("matrix value count " + std::to_string(values_.size()) + " does not match " +
                             std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }
    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ > 0 ? rows.begin()->size() : 0;
        values_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw ShapeError("ragged matrix literal");
            values_.insert(values_.end(), r.begin(), r.end());
        }
    }

    static Matrix row_vector(std::vector<T> values) {
        const auto n = values.size();
        return Matrix(1, n, std::move(values));
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
    T& operator[](std::size_t i) noexcept { return values_[i]; }
    const T& operator[](std::size_t i) const noexcept { return values_[i]; }

    std::span<T> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }

    std::span<T> values() noexcept { return values_; }
    std::span<const T> values() const noexcept { return values_; }
    const std::vector<T>& storage() const noexcept { return values_; }

    void fill(T v) { std::fill(values_.begin(), values_.end(), v); }

    bool same_shape(const Matrix& other) const noexcept { return rows_ == other.rows_ && cols_ == other.cols_; }

    template <typename U>
    Matrix<U> cast() const {
        std::vector<U> out(values_.size());
        std::transform(values_.begin(), values_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return Matrix<U>(rows_, cols_, std::move(out));
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> values_;
};

inline std::string shape_string(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

template <typename T>
std::string shape_string(const Matrix<T>& m) {
    return shape_string(m.rows(), m.cols());
}

/// A trainable tensor with its gradient accumulator.
template <typename T>
struct Param {
    Matrix<T> value;
    Matrix<T> grad;
    bool trainable = true;

    Param() = default;
    explicit Param(Matrix<T> v, bool is_trainable = true)
        : value(std::move(v)), grad(value.rows(), value.cols()), trainable(is_trainable) {}

    void zero_grad() { grad = Matrix<T>(value.rows(), value.cols()); }
};

/// y = a · b
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul " + shape_string(a) + " by " + shape_string(b));
    }
    Matrix<T> y(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t out = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        T* yr = &y(i, 0);
        for (std::size_t k = 0; k < inner; ++k) {
            const T aik = a(i, k);
            const T* br = &b(k, 0);
            for (std::size_t j = 0; j < out; ++j) yr[j] += aik * br[j];
        }
    }
    return y;
}

/// y = a · bᵀ
template <typename T>
Matrix<T> matmul_bt(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_bt " + shape_string(a) + " by transposed " + shape_string(b));
    }
    Matrix<T> y(a.rows(), b.rows());
    const std::size_t inner = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const T* ar = &a(i, 0);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const T* br = &b(j, 0);
            T acc{};
            for (std::size_t k = 0; k < inner; ++k) acc += ar[k] * br[k];
            y(i, j) = acc;
        }
    }
    return y;
}

/// acc += aᵀ · b
template <typename T>
void accumulate_at_b(Matrix<T>& acc, const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || acc.rows() != a.cols() || acc.cols() != b.cols()) {
        throw ShapeError("accumulate_at_b " + shape_string(a) + "ᵀ by " + shape_string(b) + " into " +
                         shape_string(acc));
    }
    const std::size_t out = b.cols();
    for (std::size_t n = 0; n < a.rows(); ++n) {
        const T* br = &b(n, 0);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const T ani = a(n, i);
            T* accr = &acc(i, 0);
            for (std::size_t j = 0; j < out; ++j) accr[j] += ani * br[j];
        }
    }
}

/// Horizontal concatenation of two matrices with equal row counts.
template <typename T>
Matrix<T> hconcat(const Matrix<T>& left, const Matrix<T>& right) {
    if (left.rows() != right.rows()) {
        throw ShapeError("hconcat " + shape_string(left) + " with " + shape_string(right));
    }
    Matrix<T> y(left.rows(), left.cols() + right.cols());
    for (std::size_t r = 0; r < left.rows(); ++r) {
        auto out = y.row(r);
        std::copy(left.row(r).begin(), left.row(r).end(), out.begin());
        std::copy(right.row(r).begin(), right.row(r).end(), out.begin() + static_cast<std::ptrdiff_t>(left.cols()));
    }
    return y;
}

/// Columns [begin, begin + count) of m.
template <typename T>
Matrix<T> column_block(const Matrix<T>& m, std::size_t begin, std::size_t count) {
    if (begin + count > m.cols()) throw ShapeError("column block out of range for " + shape_string(m));
    Matrix<T> y(m.rows(), count);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto src = m.row(r).subspan(begin, count);
        std::copy(src.begin(), src.end(), y.row(r).begin());
    }
    return y;
}

/// FNV-1a over the raw bytes of the values; used to detect any change to a tensor.
template <typename T>
std::uint64_t content_hash(const Matrix<T>& m) {
    static_assert(sizeof(T) <= 8, "padded types (long double) have indeterminate bytes");
    std::uint64_t h = 1469598103934665603ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.values().data());
    for (std::size_t i = 0; i < m.size() * sizeof(T); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace clipdepth
