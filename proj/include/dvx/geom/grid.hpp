#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "dvx/geom/polygon.hpp"

namespace dvx::geom {

/// Regular BEV grid. Rows run along x, columns along y; cell (i, j) has its center at
/// (x_min + (i + 0.5) * cell_x, y_min + (j + 0.5) * cell_y).
struct GridSpec {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double cell_x = 1.0, cell_y = 1.0;
    int height = 0;  // H, cells along x
    int width = 0;   // W, cells along y
    double z_min = -std::numeric_limits<double>::infinity();
    double z_max = std::numeric_limits<double>::infinity();

    /// Builds a grid with H = round((x_max - x_min) / cell_x), W likewise. Throws on
    /// non-positive extents or cell sizes.
    static GridSpec make(double x_min, double x_max, double y_min, double y_max, double cell_x,
                         double cell_y, double z_min = -std::numeric_limits<double>::infinity(),
                         double z_max = std::numeric_limits<double>::infinity());

    /// Same extent with cells enlarged by `stride`; dimensions are ceil(H / stride), ceil(W / stride).
    GridSpec downsampled(int stride) const;

    std::size_t cells() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
    Vec2 cell_center(int i, int j) const {
        return {x_min + (i + 0.5) * cell_x, y_min + (j + 0.5) * cell_y};
    }
    /// Cell containing (x, y), or false when outside [x_min, x_max) x [y_min, y_max).
    bool locate(double x, double y, int& i, int& j) const;
    /// The grid extent as an axis-aligned rectangle.
    OrientedRect extent_rect() const;

    void validate() const;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// H x W binary mask stored row-major, one byte per cell (values 0 or 1).
class BitMask2D {
public:
    BitMask2D() = default;
    BitMask2D(int height, int width, bool value = false);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return bits_.size(); }

    bool at(int i, int j) const { return bits_[index(i, j)] != 0; }
    void set(int i, int j, bool v) { bits_[index(i, j)] = v ? 1 : 0; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    std::size_t popcount() const;
    bool all() const { return popcount() == size(); }
    bool none() const { return popcount() == 0; }

    BitMask2D operator&(const BitMask2D& o) const;
    BitMask2D operator|(const BitMask2D& o) const;
    BitMask2D operator~() const;
    /// Elementwise a <= b.
    bool subset_of(const BitMask2D& o) const;
    friend bool operator==(const BitMask2D&, const BitMask2D&) = default;

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(j);
    }
    void check_same_shape(const BitMask2D& o) const;

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Cell (i, j) is set iff its center lies inside `poly` (boundary within 1e-9 counts).
BitMask2D rasterize_mask(const ConvexPolygon& poly, const GridSpec& grid);

}  // namespace dvx::geom
