#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dvx/core/point_cloud.hpp"
#include "dvx/geom/box.hpp"
#include "dvx/geom/polygon.hpp"
#include "dvx/geom/pose.hpp"
#include "dvx/sim/sensor.hpp"

namespace dvx::sim {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct PoseNoise {
    double sigma_t = 0.0;    // m, per planar axis
    double sigma_yaw = 0.0;  // rad
};

struct SceneSpec {
    int num_objects = 20;
    Interval length{3.6, 4.8};
    Interval width{1.6, 2.0};
    Interval height{1.4, 1.8};
    /// World-frame region holding every object footprint.
    geom::OrientedRect placement_region{{0.0, 0.0}, {40.0, 20.0}, 0.0};

    double vehicle_mount_height = 1.8;
    double infra_mount_height = 5.0;
    double infra_pitch_down = 10.0 * 3.141592653589793 / 180.0;
    Interval infra_x{-30.0, 30.0};
    Interval infra_abs_y{22.0, 30.0};
    /// Infrastructure heading jitter around "facing the road axis".
    double infra_yaw_jitter = 30.0 * 3.141592653589793 / 180.0;

    /// Noise folded into the reported infrastructure pose.
    PoseNoise pose_noise{};
    WorldModel world{};

    void validate() const;
};

struct AgentFrame {
    geom::PoseSE3 pose;           // world from sensor
    PointCloud cloud;             // sensor frame
    geom::PoseSE3 reported_pose;  // pose as communicated, possibly noisy
};

struct ScenePair {
    AgentFrame vehicle;
    AgentFrame infra;
    std::vector<geom::Box3D> gt_boxes;  // vehicle frame
    std::uint64_t scene_id = 0;
    /// Set when object placement gave up before reaching num_objects.
    bool placement_shortfall = false;

    /// Infrastructure-to-vehicle transform using true (false) or reported (true) poses.
    geom::PoseSE3 infra_to_vehicle(bool use_reported) const;
};

/// Deterministic scene for (spec, sensors, seed). Objects never overlap in BEV.
ScenePair generate_scene(const SceneSpec& spec, const std::pair<SensorModel, SensorModel>& sensors,
                         std::uint64_t seed, std::uint64_t scene_id = 0);

/// Renders both agents for explicitly given world boxes and poses. Used by generate_scene and
/// to build hand-constructed scenes.
ScenePair render_scene(std::vector<geom::Box3D> world_boxes, const geom::PoseSE3& vehicle_pose,
                       const geom::PoseSE3& infra_pose, const SceneSpec& spec,
                       const std::pair<SensorModel, SensorModel>& sensors, std::uint64_t seed,
                       bool noise_free = false);

/// Perturbs planar translation by N(0, sigma_t^2) per axis and heading by N(0, sigma_yaw^2)
/// about the world z-axis through the sensor; z is untouched.
geom::PoseSE3 inject_pose_noise(const geom::PoseSE3& pose, double sigma_t, double sigma_yaw, std::uint64_t seed);

/// Vehicle cloud followed by the infrastructure cloud expressed in the vehicle frame.
PointCloud fuse_early(const ScenePair& pair, bool use_reported_pose);

}  // namespace dvx::sim
