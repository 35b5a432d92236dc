#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dvx/geom/box.hpp"
#include "dvx/geom/grid.hpp"
#include "dvx/model/network.hpp"

namespace dvx::model {

constexpr int kRegChannels = 8;

/// Regression vector of `box` relative to cell (i, j): offsets in cells, z, log extents,
/// sin/cos of twice the heading. A box turned by pi is the same box, so the doubled angle gives
/// one target per box.
std::array<double, kRegChannels> encode_box(const geom::Box3D& box, const geom::GridSpec& grid, int i, int j);
/// Exact inverse of encode_box (extents exp-transformed, yaw = atan2(sin, cos) / 2, in (-pi/2, pi/2]).
geom::Box3D decode_box(std::span<const double> reg, const geom::GridSpec& grid, int i, int j);

/// Dense training targets on the feature grid. Each box is assigned to the cell containing its
/// center; a box whose center cell is already taken keeps the earlier box.
struct Targets {
    std::vector<double> cls;                // H * W, 0 or 1
    std::vector<double> reg;                // H * W * 8, zero outside positives
    std::vector<std::size_t> positives;     // cell indices, ascending
    int dropped_outside = 0;                // centers outside the grid
    int dropped_collision = 0;              // center cell already assigned
};

Targets encode_targets(std::span<const geom::Box3D> gt, const geom::GridSpec& grid);

struct Detection {
    geom::Box3D box;
    double score = 0.0;
};

/// Cells with sigmoid(logit) >= score_thr become boxes, then rotated NMS at nms_thr.
/// Output is in NMS visit order (descending score).
template <typename T>
std::vector<Detection> decode_detections(const HeadOutput<T>& out, const geom::GridSpec& grid, double score_thr,
                                         double nms_thr);

}  // namespace dvx::model
