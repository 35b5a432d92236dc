#include "dvx/dma/instance_bank.hpp"

#include <cmath>
#include <numbers>

#include "dvx/core/error.hpp"
#include "dvx/core/parallel.hpp"
#include "dvx/core/rng.hpp"

namespace dvx::dma {

namespace {

constexpr int kPlacementAttempts = 10;
constexpr double kPlacementMargin = 2.0;  // meters kept free along the grid border

PointCloud crop(const PointCloud& cloud, const geom::Box3D& box) {
    PointCloud out;
    for (const Point& p : cloud) {
        if (geom::point_in_box(p, box)) {
            out.push_back(p);
        }
    }
    return out;
}

PointCloud move_rigid(const PointCloud& pts, const geom::Box3D& from, const geom::Box3D& to) {
    const double dyaw = to.yaw - from.yaw;
    const double c = std::cos(dyaw);
    const double s = std::sin(dyaw);
    PointCloud out;
    out.reserve(pts.size());
    for (const Point& p : pts) {
        const double dx = p.x - from.x;
        const double dy = p.y - from.y;
        out.push_back({to.x + c * dx - s * dy, to.y + s * dx + c * dy, p.z - from.z + to.z, p.intensity});
    }
    return out;
}

}  // namespace

const char* domain_name(Domain d) {
    switch (d) {
        case Domain::Fused:
            return "fused";
        case Domain::Vehicle:
            return "vehicle";
        case Domain::Infra:
            return "infra";
    }
    return "?";
}

Domain classify_domain(std::size_t n_v, std::size_t n_i, double tau_l, double tau_h) {
    if (!(0.0 < tau_l && tau_l < tau_h && tau_h < 1.0)) {
        fail(ErrorKind::Data, "domain thresholds must satisfy 0 < tau_l < tau_h < 1");
    }
    if (n_v + n_i == 0) {
        fail(ErrorKind::Data, "classify_domain: instance has no points");
    }
    const double r = static_cast<double>(n_v) / static_cast<double>(n_v + n_i);
    if (r < tau_l) {
        return Domain::Infra;
    }
    if (r > tau_h) {
        return Domain::Vehicle;
    }
    return Domain::Fused;
}

InstanceBank::InstanceBank(double tau_l, double tau_h) : tau_l_(tau_l), tau_h_(tau_h) {
    if (!(0.0 < tau_l && tau_l < tau_h && tau_h < 1.0)) {
        fail(ErrorKind::Data, "domain thresholds must satisfy 0 < tau_l < tau_h < 1");
    }
}

bool InstanceBank::add(PointCloud points_v, PointCloud points_i, const geom::Box3D& box) {
    if (points_v.empty() && points_i.empty()) {
        return false;
    }
    Instance inst;
    inst.domain = classify_domain(points_v.size(), points_i.size(), tau_l_, tau_h_);
    inst.points_v = std::move(points_v);
    inst.points_i = std::move(points_i);
    inst.box = box;
    members_[static_cast<int>(inst.domain)].push_back(instances_.size());
    instances_.push_back(std::move(inst));
    return true;
}

InstanceBank build_bank(std::span<const sim::ScenePair> scenes, double tau_l, double tau_h, int threads) {
    struct Crop {
        PointCloud v, i;
        geom::Box3D box;
    };
    std::vector<std::vector<Crop>> per_scene(scenes.size());
    parallel_for(scenes.size(), threads, [&](std::size_t s) {
        const sim::ScenePair& pair = scenes[s];
        const PointCloud infra_v = geom::transform_points(pair.infra.cloud, pair.infra_to_vehicle(false));
        for (const auto& box : pair.gt_boxes) {
            per_scene[s].push_back({crop(pair.vehicle.cloud, box), crop(infra_v, box), box});
        }
    });
    InstanceBank bank(tau_l, tau_h);
    for (auto& crops : per_scene) {
        for (auto& c : crops) {
            bank.add(std::move(c.v), std::move(c.i), c.box);
        }
    }
    return bank;
}

AugmentedScene passthrough(const sim::ScenePair& pair) {
    AugmentedScene out;
    out.vehicle = pair.vehicle.cloud;
    out.infra = pair.infra.cloud;
    out.early = sim::fuse_early(pair, false);
    out.gt_boxes = pair.gt_boxes;
    return out;
}

Domain draw_domain(const InstanceBank& bank, const DomainProbs& probs, double u) {
    Domain d = Domain::Infra;
    if (u < probs.fused) {
        d = Domain::Fused;
    } else if (u < probs.fused + probs.vehicle) {
        d = Domain::Vehicle;
    }
    if (!bank.members(d).empty()) {
        return d;
    }
    if (!bank.members(Domain::Fused).empty()) {
        return Domain::Fused;
    }
    for (const Domain alt : {Domain::Vehicle, Domain::Infra}) {
        if (!bank.members(alt).empty()) {
            return alt;
        }
    }
    fail(ErrorKind::Data, "instance bank is empty");
}

AugmentedScene sample_and_inject(const InstanceBank& bank, const sim::ScenePair& pair, const DomainProbs& probs,
                                 int n_samples, std::uint64_t seed, const geom::GridSpec& placement) {
    if (std::abs(probs.fused + probs.vehicle + probs.infra - 1.0) > 1e-9 || probs.fused < 0 || probs.vehicle < 0 ||
        probs.infra < 0) {
        fail(ErrorKind::Data, "DMA probabilities must be non-negative and sum to 1");
    }
    AugmentedScene out = passthrough(pair);
    if (n_samples <= 0) {
        return out;
    }
    if (bank.empty()) {
        fail(ErrorKind::Data, "sample_and_inject: instance bank is empty");
    }
    Rng rng(seed);
    const geom::PoseSE3 vehicle_from_infra = pair.infra_to_vehicle(false);
    const geom::PoseSE3 infra_from_vehicle = geom::invert(vehicle_from_infra);
    std::vector<geom::Box3D> occupied = out.gt_boxes;

    for (int k = 0; k < n_samples; ++k) {
        const Domain d = draw_domain(bank, probs, rng.uniform());
        const auto& pool = bank.members(d);
        const std::size_t idx = pool[rng.index(pool.size())];
        const Instance& inst = bank.instances()[idx];

        for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
            geom::Box3D placed = inst.box;
            placed.x = rng.uniform(placement.x_min + kPlacementMargin, placement.x_max - kPlacementMargin);
            placed.y = rng.uniform(placement.y_min + kPlacementMargin, placement.y_max - kPlacementMargin);
            placed.yaw = geom::normalize_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
            bool clash = false;
            for (const auto& o : occupied) {
                if (geom::rotated_iou(o, placed) > 0.0) {
                    clash = true;
                    break;
                }
            }
            if (clash) {
                continue;
            }
            const PointCloud pv = move_rigid(inst.points_v, inst.box, placed);
            const PointCloud pi = move_rigid(inst.points_i, inst.box, placed);
            out.vehicle.insert(out.vehicle.end(), pv.begin(), pv.end());
            out.early.insert(out.early.end(), pv.begin(), pv.end());
            out.early.insert(out.early.end(), pi.begin(), pi.end());
            const PointCloud pi_local = geom::transform_points(pi, infra_from_vehicle);
            out.infra.insert(out.infra.end(), pi_local.begin(), pi_local.end());
            occupied.push_back(placed);
            out.gt_boxes.push_back(placed);
            out.accepted.push_back(idx);
            out.injected_boxes.push_back(placed);
            break;
        }
    }
    return out;
}

}  // namespace dvx::dma
