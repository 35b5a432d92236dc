#pragma once

#include <span>

#include "dvx/core/point_cloud.hpp"
#include "dvx/core/rng.hpp"
#include "dvx/geom/box.hpp"
#include "dvx/geom/pose.hpp"

namespace dvx::sim {

/// Ray-grid LiDAR: `beams` elevation rings spanning [elevation_min, elevation_max] crossed with
/// azimuths every `azimuth_step` inside a horizontal field of view centered on the sensor x-axis.
struct SensorModel {
    int beams = 16;
    double fov = 6.283185307179586;  // radians, (0, 2*pi]
    double azimuth_step = 0.4 * 3.141592653589793 / 180.0;
    double max_range = 50.0;
    double range_noise_sigma = 0.02;
    double dropout_prob = 0.05;
    double elevation_min = -15.0 * 3.141592653589793 / 180.0;
    double elevation_max = 3.0 * 3.141592653589793 / 180.0;

    void validate() const;
    /// Number of azimuth columns per ring.
    int azimuth_count() const;
    double elevation(int beam) const;
    double azimuth(int column) const;
};

SensorModel default_vehicle_sensor();
SensorModel default_infra_sensor();

/// Extra return filtering for the world: probability that a ground hit produces a point.
struct WorldModel {
    double ground_return_prob = 0.3;
};

/// Casts every ray of `sensor` mounted at `sensor_pose` (world from sensor) against the ground
/// plane z = 0 and the given world-frame boxes. The first hit along each ray wins. Points are
/// returned in the sensor frame. `noise_free` disables range noise, dropout and ground thinning.
PointCloud cast_cloud(const SensorModel& sensor, const geom::PoseSE3& sensor_pose,
                      std::span<const geom::Box3D> world_boxes, const WorldModel& world, Rng& rng,
                      bool noise_free = false);

/// Distance along a ray (unit direction) to the first entry into the box, or a negative
/// value when the ray misses it.
double ray_box_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const geom::Box3D& box);

}  // namespace dvx::sim
