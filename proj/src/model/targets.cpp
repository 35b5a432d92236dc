#include "dvx/model/targets.hpp"

#include <algorithm>
#include <cmath>

#include "dvx/core/error.hpp"

namespace dvx::model {

std::array<double, kRegChannels> encode_box(const geom::Box3D& box, const geom::GridSpec& grid, int i, int j) {
    const geom::Vec2 c = grid.cell_center(i, j);
    return {(box.x - c.x()) / grid.cell_x,
            (box.y - c.y()) / grid.cell_y,
            box.z,
            std::log(box.h),
            std::log(box.w),
            std::log(box.l),
            std::sin(2.0 * box.yaw),
            std::cos(2.0 * box.yaw)};
}

geom::Box3D decode_box(std::span<const double> reg, const geom::GridSpec& grid, int i, int j) {
    const geom::Vec2 c = grid.cell_center(i, j);
    geom::Box3D b;
    b.x = c.x() + reg[0] * grid.cell_x;
    b.y = c.y() + reg[1] * grid.cell_y;
    b.z = reg[2];
    b.h = std::exp(reg[3]);
    b.w = std::exp(reg[4]);
    b.l = std::exp(reg[5]);
    b.yaw = 0.5 * std::atan2(reg[6], reg[7]);
    return b;
}

Targets encode_targets(std::span<const geom::Box3D> gt, const geom::GridSpec& grid) {
    Targets t;
    t.cls.assign(grid.cells(), 0.0);
    t.reg.assign(grid.cells() * kRegChannels, 0.0);
    for (const auto& box : gt) {
        int i = 0, j = 0;
        if (!grid.locate(box.x, box.y, i, j)) {
            ++t.dropped_outside;
            continue;
        }
        const std::size_t cell = static_cast<std::size_t>(i) * grid.width + j;
        if (t.cls[cell] != 0.0) {
            ++t.dropped_collision;
            continue;
        }
        t.cls[cell] = 1.0;
        const auto r = encode_box(box, grid, i, j);
        std::copy(r.begin(), r.end(), t.reg.begin() + static_cast<std::ptrdiff_t>(cell * kRegChannels));
        t.positives.push_back(cell);
    }
    std::sort(t.positives.begin(), t.positives.end());
    return t;
}

template <typename T>
std::vector<Detection> decode_detections(const HeadOutput<T>& out, const geom::GridSpec& grid, double score_thr,
                                         double nms_thr) {
    if (out.cls.rank() != 3 || out.cls.dim(0) != grid.height || out.cls.dim(1) != grid.width ||
        out.reg.dim(2) != kRegChannels) {
        fail(ErrorKind::Data, "decode_detections: head output " + nn::shape_str(out.cls.shape()) +
                                  " does not match the feature grid");
    }
    std::vector<geom::Box3D> boxes;
    std::vector<double> scores;
    const auto cls = out.cls.data();
    const auto reg = out.reg.data();
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            const std::size_t cell = static_cast<std::size_t>(i) * grid.width + j;
            const double s = 1.0 / (1.0 + std::exp(-static_cast<double>(cls[cell])));
            if (!(s >= score_thr)) {
                continue;
            }
            std::array<double, kRegChannels> r{};
            for (int k = 0; k < kRegChannels; ++k) {
                r[k] = static_cast<double>(reg[cell * kRegChannels + k]);
            }
            const geom::Box3D b = decode_box(r, grid, i, j);
            if (!std::isfinite(b.h) || !std::isfinite(b.w) || !std::isfinite(b.l)) {
                continue;
            }
            boxes.push_back(b);
            scores.push_back(s);
        }
    }
    std::vector<Detection> dets;
    for (const std::size_t k : geom::nms(boxes, scores, nms_thr)) {
        dets.push_back({boxes[k], scores[k]});
    }
    return dets;
}

template std::vector<Detection> decode_detections<float>(const HeadOutput<float>&, const geom::GridSpec&, double,
                                                          double);
template std::vector<Detection> decode_detections<double>(const HeadOutput<double>&, const geom::GridSpec&, double,
                                                           double);

}  // namespace dvx::model
