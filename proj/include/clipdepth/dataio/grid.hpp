#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "clipdepth/errors.hpp"
#include "clipdepth/tensor.hpp"

namespace clipdepth {

struct GridShape {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t cells() const noexcept { return height * width; }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Two grid representations are used:
//  - cell matrices: one row per grid cell in row-major order, each row a vector
//    (patch embeddings);
//  - maps: a height x width Matrix of scalars (depth grids, pixel maps).

/// Mirrors a cell matrix left to right.
template <typename T>
Matrix<T> hflip_cells(const Matrix<T>& cells, GridShape shape) {
    if (cells.rows() != shape.cells()) throw ShapeError("hflip: cell count does not match grid");
    Matrix<T> out(cells.rows(), cells.cols());
    for (std::size_t y = 0; y < shape.height; ++y) {
        for (std::size_t x = 0; x < shape.width; ++x) {
            const auto src = cells.row(y * shape.width + (shape.width - 1 - x));
            std::copy(src.begin(), src.end(), out.row(y * shape.width + x).begin());
        }
    }
    return out;
}

/// Mirrors a scalar map left to right.
template <typename T>
Matrix<T> hflip(const Matrix<T>& map) {
    Matrix<T> out(map.rows(), map.cols());
    for (std::size_t y = 0; y < map.rows(); ++y) {
        for (std::size_t x = 0; x < map.cols(); ++x) out(y, x) = map(y, map.cols() - 1 - x);
    }
    return out;
}

/// Splits a cell matrix into square height x height tiles, left to right.
template <typename T>
std::vector<Matrix<T>> tile_split(const Matrix<T>& cells, GridShape shape) {
    if (cells.rows() != shape.cells()) throw ShapeError("tile_split: cell count does not match grid");
    if (shape.height == 0 || shape.width % shape.height != 0) {
        throw ShapeError("tile_split: grid width " + std::to_string(shape.width) + " is not a multiple of height " +
                         std::to_string(shape.height));
    }
    const std::size_t side = shape.height;
    std::vector<Matrix<T>> tiles;
    for (std::size_t t = 0; t < shape.width / side; ++t) {
        Matrix<T> tile(side * side, cells.cols());
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                const auto src = cells.row(y * shape.width + t * side + x);
                std::copy(src.begin(), src.end(), tile.row(y * side + x).begin());
            }
        }
        tiles.push_back(std::move(tile));
    }
    return tiles;
}

/// Inverse of tile_split for cell matrices.
template <typename T>
Matrix<T> tile_merge(const std::vector<Matrix<T>>& tiles, std::size_t side) {
    if (tiles.empty()) throw ShapeError("tile_merge: no tiles");
    const std::size_t width = side * tiles.size();
    Matrix<T> cells(side * width, tiles.front().cols());
    for (std::size_t t = 0; t < tiles.size(); ++t) {
        if (tiles[t].rows() != side * side || tiles[t].cols() != cells.cols()) {
            throw ShapeError("tile_merge: tile " + std::to_string(t) + " is " + shape_string(tiles[t]));
        }
        for (std::size_t y = 0; y < side; ++y) {
            for (std::size_t x = 0; x < side; ++x) {
                const auto src = tiles[t].row(y * side + x);
                std::copy(src.begin(), src.end(), cells.row(y * width + t * side + x).begin());
            }
        }
    }
    return cells;
}

/// Splits a scalar map into square rows x rows tiles, left to right.
template <typename T>
std::vector<Matrix<T>> tile_split_map(const Matrix<T>& map) {
    auto tiles = tile_split(Matrix<T>(map.rows() * map.cols(), 1, map.storage()), GridShape{map.rows(), map.cols()});
    std::vector<Matrix<T>> out;
    for (auto& t : tiles) out.emplace_back(map.rows(), map.rows(), t.storage());
    return out;
}

/// Concatenates square map tiles left to right.
template <typename T>
Matrix<T> tile_merge_map(const std::vector<Matrix<T>>& tiles) {
    if (tiles.empty()) throw ShapeError("tile_merge: no tiles");
    const std::size_t side = tiles.front().rows();
    std::vector<Matrix<T>> cells;
    for (const auto& t : tiles) {
        if (t.rows() != side || t.cols() != side) throw ShapeError("tile_merge: tiles must be equal squares");
        cells.emplace_back(side * side, 1, t.storage());
    }
    const auto merged = tile_merge(cells, side);
    return Matrix<T>(side, side * tiles.size(), merged.storage());
}

} // namespace clipdepth
