#include "dvx/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dvx/core/error.hpp"
#include "dvx/core/rng.hpp"

namespace dvx::sim {

namespace {

constexpr int kPlacementAttempts = 100;

bool inside_region(const geom::Box3D& box, const geom::OrientedRect& region) {
    const geom::ConvexPolygon reg = region.polygon();
    const geom::ConvexPolygon fp = box.footprint().polygon();
    return std::all_of(fp.vertices.begin(), fp.vertices.end(), [&](const geom::Vec2& v) { return reg.contains(v, 0.0); });
}

}  // namespace

void SceneSpec::validate() const {
    if (num_objects < 0 || !(length.lo > 0) || !(width.lo > 0) || !(height.lo > 0) || length.hi < length.lo ||
        width.hi < width.lo || height.hi < height.lo || !(placement_region.half_extents.minCoeff() > 0) ||
        pose_noise.sigma_t < 0 || pose_noise.sigma_yaw < 0) {
        fail(ErrorKind::Data, "invalid scene spec");
    }
}

geom::PoseSE3 ScenePair::infra_to_vehicle(bool use_reported) const {
    const geom::PoseSE3& v = use_reported ? vehicle.reported_pose : vehicle.pose;
    const geom::PoseSE3& i = use_reported ? infra.reported_pose : infra.pose;
    return geom::compose(geom::invert(v), i);
}

geom::PoseSE3 inject_pose_noise(const geom::PoseSE3& pose, double sigma_t, double sigma_yaw, std::uint64_t seed) {
    if (sigma_t < 0.0 || sigma_yaw < 0.0) {
        fail(ErrorKind::Data, "pose noise sigmas must be non-negative");
    }
    if (sigma_t == 0.0 && sigma_yaw == 0.0) {
        return pose;
    }
    Rng rng(seed);
    const double dx = sigma_t * rng.normal();
    const double dy = sigma_t * rng.normal();
    const double dyaw = sigma_yaw * rng.normal();
    const Eigen::Matrix3d rz = Eigen::AngleAxisd(dyaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return {rz * pose.rotation(), pose.translation() + Eigen::Vector3d(dx, dy, 0.0)};
}

ScenePair render_scene(std::vector<geom::Box3D> world_boxes, const geom::PoseSE3& vehicle_pose,
                       const geom::PoseSE3& infra_pose, const SceneSpec& spec,
                       const std::pair<SensorModel, SensorModel>& sensors, std::uint64_t seed, bool noise_free) {
    ScenePair pair;
    pair.vehicle.pose = vehicle_pose;
    pair.infra.pose = infra_pose;

    Rng vrng(derive_seed(seed, "vehicle-rays"));
    Rng irng(derive_seed(seed, "infra-rays"));
    pair.vehicle.cloud = cast_cloud(sensors.first, vehicle_pose, world_boxes, spec.world, vrng, noise_free);
    pair.infra.cloud = cast_cloud(sensors.second, infra_pose, world_boxes, spec.world, irng, noise_free);

    pair.vehicle.reported_pose = vehicle_pose;
    pair.infra.reported_pose =
        inject_pose_noise(infra_pose, spec.pose_noise.sigma_t, spec.pose_noise.sigma_yaw, derive_seed(seed, "pose-noise"));

    const geom::PoseSE3 vehicle_from_world = geom::invert(vehicle_pose);
    pair.gt_boxes.reserve(world_boxes.size());
    for (const auto& b : world_boxes) {
        pair.gt_boxes.push_back(geom::transform_box(b, vehicle_from_world));
    }
    return pair;
}

ScenePair generate_scene(const SceneSpec& spec, const std::pair<SensorModel, SensorModel>& sensors,
                         std::uint64_t seed, std::uint64_t scene_id) {
    spec.validate();
    sensors.first.validate();
    sensors.second.validate();
    Rng rng(derive_seed(seed, "layout"));

    const geom::PoseSE3 vehicle_pose = geom::PoseSE3::from_yaw(0.0, {0.0, 0.0, spec.vehicle_mount_height});

    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double ix = rng.uniform(spec.infra_x.lo, spec.infra_x.hi);
    const double iy = side * rng.uniform(spec.infra_abs_y.lo, spec.infra_abs_y.hi);
    // face across the road (toward y = 0), with jitter
    const double iyaw = geom::normalize_angle(-side * 0.5 * std::numbers::pi +
                                              rng.uniform(-spec.infra_yaw_jitter, spec.infra_yaw_jitter));
    const geom::PoseSE3 infra_pose =
        geom::PoseSE3::from_ypr(iyaw, spec.infra_pitch_down, 0.0, {ix, iy, spec.infra_mount_height});

    // the ego car and the infrastructure pole occupy space too
    std::vector<geom::Box3D> occupied = {
        geom::Box3D{0.0, 0.0, 0.8, 1.6, 2.0, 4.6, 0.0},
        geom::Box3D{ix, iy, 2.5, 5.0, 1.0, 1.0, 0.0},
    };
    std::vector<geom::Box3D> objects;
    bool shortfall = false;
    const geom::OrientedRect& region = spec.placement_region;
    for (int k = 0; k < spec.num_objects; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            geom::Box3D b;
            b.l = rng.uniform(spec.length.lo, spec.length.hi);
            b.w = rng.uniform(spec.width.lo, spec.width.hi);
            b.h = rng.uniform(spec.height.lo, spec.height.hi);
            const double u = rng.uniform(-1.0, 1.0) * region.half_extents.x();
            const double v = rng.uniform(-1.0, 1.0) * region.half_extents.y();
            const double c = std::cos(region.yaw);
            const double s = std::sin(region.yaw);
            b.x = region.center.x() + c * u - s * v;
            b.y = region.center.y() + s * u + c * v;
            b.z = 0.5 * b.h;
            b.yaw = geom::normalize_angle(rng.uniform(-std::numbers::pi, std::numbers::pi));
            if (!inside_region(b, region)) {
                continue;
            }
            const bool clash = std::any_of(occupied.begin(), occupied.end(),
                                           [&](const geom::Box3D& o) { return geom::rotated_iou(o, b) > 0.0; });
            if (clash) {
                continue;
            }
            occupied.push_back(b);
            objects.push_back(b);
            placed = true;
        }
        if (!placed) {
            shortfall = true;
        }
    }

    ScenePair pair = render_scene(objects, vehicle_pose, infra_pose, spec, sensors, derive_seed(seed, "render"));
    pair.scene_id = scene_id;
    pair.placement_shortfall = shortfall;
    return pair;
}

PointCloud fuse_early(const ScenePair& pair, bool use_reported_pose) {
    PointCloud out = pair.vehicle.cloud;
    const PointCloud moved = geom::transform_points(pair.infra.cloud, pair.infra_to_vehicle(use_reported_pose));
    out.insert(out.end(), moved.begin(), moved.end());
    return out;
}

}  // namespace dvx::sim
