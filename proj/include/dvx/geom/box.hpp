#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/polygon.hpp"
#include "dvx/geom/pose.hpp"

namespace dvx::geom {

/// Upright oriented box. (x, y, z) is the geometric center; l runs along the heading,
/// w across it, h vertically.
struct Box3D {
    double x = 0.0, y = 0.0, z = 0.0;
    double h = 1.0, w = 1.0, l = 1.0;
    double yaw = 0.0;

    /// Extent at or below this is treated as zero-area.
    static constexpr double kDegenerateExtent = 1e-6;

    bool degenerate() const { return h <= kDegenerateExtent || w <= kDegenerateExtent || l <= kDegenerateExtent; }
    OrientedRect footprint() const { return {{x, y}, {0.5 * l, 0.5 * w}, yaw}; }
    std::array<double, 7> to_array() const { return {x, y, z, h, w, l, yaw}; }
    static Box3D from_array(std::span<const double> v);

    friend bool operator==(const Box3D&, const Box3D&) = default;
};

/// IoU of the two BEV footprints (z and h ignored). 0 for disjoint or degenerate boxes.
double rotated_iou(const Box3D& a, const Box3D& b);

/// Greedy rotated NMS. Visits boxes by descending score (ties: lower index first) and drops
/// any box whose IoU with an already kept box is >= iou_thr. Returns kept indices in visit order.
std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores, double iou_thr);

/// Indices of points inside the box (inclusive faces), tested in the box frame.
std::vector<std::size_t> points_in_box(const PointCloud& cloud, const Box3D& box);
bool point_in_box(const Point& p, const Box3D& box);

/// Rigidly moves a box. The heading picks up the pose's yaw; this assumes the pose keeps
/// the z-axis vertical (yaw-only rotation), which holds for every use in this project.
Box3D transform_box(const Box3D& box, const PoseSE3& pose);

}  // namespace dvx::geom
