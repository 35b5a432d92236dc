#include "dvx/distill/augment.hpp"

#include <Eigen/Geometry>

#include "dvx/geom/box.hpp"

namespace dvx::distill {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;

Matrix3d flip_matrix(bool flip) { return Eigen::Vector3d(1.0, flip ? -1.0 : 1.0, 1.0).asDiagonal(); }

// Maps points of an agent frame through p -> s F p (a mirror and scale in that frame).
PointCloud mirror_scale(const PointCloud& cloud, bool flip, double s) {
    PointCloud out = cloud;
    for (Point& p : out) {
        p.x *= s;
        p.y *= flip ? -s : s;
        p.z *= s;
    }
    return out;
}

// Relative pose after the vehicle frame undergoes A = s Rz F and the agent frame s F.
geom::PoseSE3 conjugate(const geom::PoseSE3& rel, const AugmentDraw& d) {
    const Matrix3d f = flip_matrix(d.flip);
    const Matrix3d rz = Eigen::AngleAxisd(d.rotation, Vector3d::UnitZ()).toRotationMatrix();
    return {rz * f * rel.rotation() * f, d.scale * (rz * f * rel.translation())};
}

}  // namespace

AugmentDraw draw_augment(const SceneAugment& cfg, Rng& rng) {
    AugmentDraw d;
    if (!cfg.enabled) {
        return d;
    }
    d.flip = rng.bernoulli(cfg.flip_prob);
    d.rotation = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    d.scale = rng.uniform(cfg.min_scale, cfg.max_scale);
    return d;
}

sim::ScenePair apply_augment(const sim::ScenePair& pair, const AugmentDraw& d) {
    sim::ScenePair out;
    out.scene_id = pair.scene_id;
    out.placement_shortfall = pair.placement_shortfall;

    const geom::PoseSE3 rz = geom::PoseSE3::from_yaw(d.rotation, Vector3d::Zero());
    out.vehicle.cloud = geom::transform_points(mirror_scale(pair.vehicle.cloud, d.flip, d.scale), rz);
    out.vehicle.pose = geom::PoseSE3::identity();
    out.vehicle.reported_pose = geom::PoseSE3::identity();

    out.infra.cloud = mirror_scale(pair.infra.cloud, d.flip, d.scale);
    out.infra.pose = conjugate(pair.infra_to_vehicle(false), d);
    out.infra.reported_pose = conjugate(pair.infra_to_vehicle(true), d);

    for (geom::Box3D b : pair.gt_boxes) {
        if (d.flip) {
            b.y = -b.y;
            b.yaw = -b.yaw;
        }
        b.x *= d.scale;
        b.y *= d.scale;
        b.z *= d.scale;
        b.h *= d.scale;
        b.w *= d.scale;
        b.l *= d.scale;
        b = geom::transform_box(b, rz);
        out.gt_boxes.push_back(b);
    }
    return out;
}

}  // namespace dvx::distill
