#include "dvx/geom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dvx/core/error.hpp"

namespace dvx::geom {

GridSpec GridSpec::make(double x_min, double x_max, double y_min, double y_max, double cell_x,
                        double cell_y, double z_min, double z_max) {
    GridSpec g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.y_min = y_min;
    g.y_max = y_max;
    g.cell_x = cell_x;
    g.cell_y = cell_y;
    g.z_min = z_min;
    g.z_max = z_max;
    if (!(x_max > x_min) || !(y_max > y_min) || !(cell_x > 0) || !(cell_y > 0)) {
        fail(ErrorKind::Data, "grid ranges and cell sizes must be positive");
    }
    g.height = static_cast<int>(std::lround((x_max - x_min) / cell_x));
    g.width = static_cast<int>(std::lround((y_max - y_min) / cell_y));
    g.validate();
    return g;
}

GridSpec GridSpec::downsampled(int stride) const {
    if (stride < 1) {
        fail(ErrorKind::Data, "grid stride must be >= 1");
    }
    GridSpec g = *this;
    g.cell_x = cell_x * stride;
    g.cell_y = cell_y * stride;
    g.height = (height + stride - 1) / stride;
    g.width = (width + stride - 1) / stride;
    return g;
}

bool GridSpec::locate(double x, double y, int& i, int& j) const {
    if (!(x >= x_min && x < x_max && y >= y_min && y < y_max)) {
        return false;
    }
    i = std::min(static_cast<int>((x - x_min) / cell_x), height - 1);
    j = std::min(static_cast<int>((y - y_min) / cell_y), width - 1);
    return true;
}

OrientedRect GridSpec::extent_rect() const {
    return {{0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}, {0.5 * (x_max - x_min), 0.5 * (y_max - y_min)}, 0.0};
}

void GridSpec::validate() const {
    if (height <= 0 || width <= 0 || !(cell_x > 0) || !(cell_y > 0) || !(x_max > x_min) || !(y_max > y_min) ||
        !(z_max > z_min)) {
        std::ostringstream os;
        os << "invalid grid: H=" << height << " W=" << width << " cell=(" << cell_x << ", " << cell_y << ")";
        fail(ErrorKind::Data, os.str());
    }
}

BitMask2D::BitMask2D(int height, int width, bool value)
    : height_(height), width_(width),
      bits_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), value ? 1 : 0) {
    if (height < 0 || width < 0) {
        fail(ErrorKind::Data, "mask dimensions must be non-negative");
    }
}

std::size_t BitMask2D::popcount() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void BitMask2D::check_same_shape(const BitMask2D& o) const {
    if (height_ != o.height_ || width_ != o.width_) {
        fail(ErrorKind::Data, "mask shape mismatch");
    }
}

BitMask2D BitMask2D::operator&(const BitMask2D& o) const {
    check_same_shape(o);
    BitMask2D r(height_, width_);
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        r.bits_[k] = bits_[k] & o.bits_[k];
    }
    return r;
}

BitMask2D BitMask2D::operator|(const BitMask2D& o) const {
    check_same_shape(o);
    BitMask2D r(height_, width_);
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        r.bits_[k] = bits_[k] | o.bits_[k];
    }
    return r;
}

BitMask2D BitMask2D::operator~() const {
    BitMask2D r(height_, width_);
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        r.bits_[k] = bits_[k] ^ 1;
    }
    return r;
}

bool BitMask2D::subset_of(const BitMask2D& o) const {
    check_same_shape(o);
    for (std::size_t k = 0; k < bits_.size(); ++k) {
        if (bits_[k] > o.bits_[k]) {
            return false;
        }
    }
    return true;
}

BitMask2D rasterize_mask(const ConvexPolygon& poly, const GridSpec& grid) {
    grid.validate();
    BitMask2D mask(grid.height, grid.width);
    if (poly.empty()) {
        return mask;
    }
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            if (poly.contains(grid.cell_center(i, j), 1e-9)) {
                mask.set(i, j, true);
            }
        }
    }
    return mask;
}

}  // namespace dvx::geom
