#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dvx/geom/box.hpp"
#include "dvx/model/targets.hpp"

namespace dvx::eval {

using model::Detection;

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double score = 0.0;
};

struct ApResult {
    /// Absent when there is no ground truth at all.
    std::optional<double> ap;
    std::vector<PrPoint> curve;  // one point per detection in sweep order
    std::size_t num_gt = 0;
    std::size_t num_det = 0;
    std::size_t num_tp = 0;
    /// Mean IoU over true-positive matches; 0 when there are none.
    double mean_iou = 0.0;
};

/// Global score-descending sweep (ties: scene order, then detection order). Each detection
/// takes the highest-IoU unmatched ground truth of its scene (ties: lower index) when that IoU
/// reaches iou_thr. AP is the area under the monotone precision envelope over all recall steps.
ApResult average_precision(std::span<const std::vector<Detection>> dets, std::span<const std::vector<geom::Box3D>> gts,
                           double iou_thr);

}  // namespace dvx::eval
