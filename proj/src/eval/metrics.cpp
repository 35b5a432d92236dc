#include "dvx/eval/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "dvx/core/error.hpp"

namespace dvx::eval {

ApResult average_precision(std::span<const std::vector<Detection>> dets, std::span<const std::vector<geom::Box3D>> gts,
                           double iou_thr) {
    if (dets.size() != gts.size()) {
        fail(ErrorKind::Data, "average_precision: detections and ground truth cover different scene counts");
    }
    struct Ref {
        double score;
        std::size_t scene;
        std::size_t index;
    };
    std::vector<Ref> order;
    ApResult r;
    for (std::size_t s = 0; s < dets.size(); ++s) {
        r.num_gt += gts[s].size();
        for (std::size_t k = 0; k < dets[s].size(); ++k) {
            order.push_back({dets[s][k].score, s, k});
        }
    }
    r.num_det = order.size();
    std::stable_sort(order.begin(), order.end(), [](const Ref& a, const Ref& b) { return a.score > b.score; });

    std::vector<std::vector<char>> used(gts.size());
    for (std::size_t s = 0; s < gts.size(); ++s) {
        used[s].assign(gts[s].size(), 0);
    }
    std::vector<char> tp(order.size(), 0);
    double iou_sum = 0.0;
    for (std::size_t n = 0; n < order.size(); ++n) {
        const Ref& d = order[n];
        const geom::Box3D& box = dets[d.scene][d.index].box;
        double best = -1.0;
        std::size_t best_g = 0;
        for (std::size_t g = 0; g < gts[d.scene].size(); ++g) {
            if (used[d.scene][g]) {
                continue;
            }
            const double iou = geom::rotated_iou(box, gts[d.scene][g]);
            if (iou > best) {
                best = iou;
                best_g = g;
            }
        }
        if (best > 0.0 && best >= iou_thr) {
            used[d.scene][best_g] = 1;
            tp[n] = 1;
            ++r.num_tp;
            iou_sum += best;
        }
    }
    r.mean_iou = r.num_tp ? iou_sum / static_cast<double>(r.num_tp) : 0.0;

    std::size_t cum_tp = 0;
    for (std::size_t n = 0; n < order.size(); ++n) {
        cum_tp += tp[n];
        const double recall = r.num_gt ? static_cast<double>(cum_tp) / static_cast<double>(r.num_gt) : 0.0;
        r.curve.push_back({recall, static_cast<double>(cum_tp) / static_cast<double>(n + 1), order[n].score});
    }
    if (r.num_gt == 0) {
        return r;
    }
    // precision envelope, swept from the right
    std::vector<double> env(r.curve.size());
    double m = 0.0;
    for (std::size_t n = r.curve.size(); n-- > 0;) {
        m = std::max(m, r.curve[n].precision);
        env[n] = m;
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t n = 0; n < r.curve.size(); ++n) {
        if (r.curve[n].recall > prev_recall) {
            ap += (r.curve[n].recall - prev_recall) * env[n];
            prev_recall = r.curve[n].recall;
        }
    }
    r.ap = ap;
    return r;
}

}  // namespace dvx::eval
