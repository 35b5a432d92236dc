#include "dvx/geom/box.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dvx/core/error.hpp"

namespace dvx::geom {

Box3D Box3D::from_array(std::span<const double> v) {
    if (v.size() != 7) {
        fail(ErrorKind::Data, "box array must have 7 entries");
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5], normalize_angle(v[6])};
}

double rotated_iou(const Box3D& a, const Box3D& b) {
    if (a.degenerate() || b.degenerate()) {
        return 0.0;
    }
    // cheap reject on circumscribed circles
    const double ra = 0.5 * std::hypot(a.l, a.w);
    const double rb = 0.5 * std::hypot(b.l, b.w);
    if (std::hypot(a.x - b.x, a.y - b.y) > ra + rb) {
        return 0.0;
    }
    const double inter = polygon_intersection(a.footprint().polygon(), b.footprint().polygon()).area();
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.l * a.w + b.l * b.w - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms(std::span<const Box3D> boxes, std::span<const double> scores, double iou_thr) {
    if (boxes.size() != scores.size()) {
        fail(ErrorKind::Data, "nms: boxes and scores differ in length");
    }
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::size_t> kept;
    for (const std::size_t idx : order) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                            [&](std::size_t k) { return rotated_iou(boxes[k], boxes[idx]) >= iou_thr; });
        if (!suppressed) {
            kept.push_back(idx);
        }
    }
    return kept;
}

bool point_in_box(const Point& p, const Box3D& box) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double dx = p.x - box.x;
    const double dy = p.y - box.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= 0.5 * box.l && std::abs(ly) <= 0.5 * box.w && std::abs(p.z - box.z) <= 0.5 * box.h;
}

std::vector<std::size_t> points_in_box(const PointCloud& cloud, const Box3D& box) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (point_in_box(cloud[i], box)) {
            idx.push_back(i);
        }
    }
    return idx;
}

Box3D transform_box(const Box3D& box, const PoseSE3& pose) {
    const Eigen::Vector3d c = pose.apply({box.x, box.y, box.z});
    Box3D out = box;
    out.x = c.x();
    out.y = c.y();
    out.z = c.z();
    out.yaw = normalize_angle(box.yaw + pose.yaw());
    return out;
}

}  // namespace dvx::geom
