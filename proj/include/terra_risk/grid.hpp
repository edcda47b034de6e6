#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace terra_risk {

/// Grid cell; x indexes columns, y indexes rows. Cell (x, y) sits at (x*res, y*res) meters.
struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Offset {
    int dx;
    int dy;
};

inline constexpr int kNumDirections = 8;

/// 8-neighborhood, counter-clockwise from +x. Direction d and (d+4)%8 are opposites.
inline constexpr std::array<Offset, kNumDirections> kNeighborOffsets{{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

constexpr int opposite_direction(int dir) noexcept { return (dir + 4) % kNumDirections; }

constexpr bool is_diagonal(int dir) noexcept { return (dir & 1) != 0; }

/// Direction index taking `from` to `to`, or nullopt when the cells are not 8-neighbors.
inline std::optional<int> direction_between(Cell from, Cell to) noexcept {
    const int dx = to.x - from.x;
    const int dy = to.y - from.y;
    for (int d = 0; d < kNumDirections; ++d) {
        if (kNeighborOffsets[d].dx == dx && kNeighborOffsets[d].dy == dy) return d;
    }
    return std::nullopt;
}

/// Row-major grid dimensions.
struct GridShape {
    int width = 0;
    int height = 0;

    std::size_t num_cells() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool contains(Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    std::size_t index(Cell c) const noexcept {
        return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
    }
    Cell cell(std::size_t index) const noexcept {
        return {static_cast<int>(index % static_cast<std::size_t>(width)),
                static_cast<int>(index / static_cast<std::size_t>(width))};
    }
    Cell neighbor(Cell c, int dir) const noexcept {
        return {c.x + kNeighborOffsets[dir].dx, c.y + kNeighborOffsets[dir].dy};
    }
    /// Directed edge id: source cell index * 8 + direction.
    std::uint64_t edge_id(Cell from, int dir) const noexcept {
        return static_cast<std::uint64_t>(index(from)) * kNumDirections + static_cast<std::uint64_t>(dir);
    }
    friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Horizontal run of a step in `dir` on a grid with the given resolution.
inline double horizontal_run(int dir, double resolution) noexcept {
    return is_diagonal(dir) ? resolution * std::sqrt(2.0) : resolution;
}

}  // namespace terra_risk
