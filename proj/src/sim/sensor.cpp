#include "dvx/sim/sensor.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "dvx/core/error.hpp"

namespace dvx::sim {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
}

void SensorModel::validate() const {
    if (beams < 1 || !(fov > 0.0) || fov > 2.0 * std::numbers::pi + 1e-12 || !(max_range > 0.0) ||
        !(azimuth_step > 0.0) || !(range_noise_sigma >= 0.0) || !(dropout_prob >= 0.0) || !(dropout_prob < 1.0) ||
        elevation_max < elevation_min) {
        fail(ErrorKind::Data, "invalid sensor model");
    }
}

int SensorModel::azimuth_count() const {
    if (fov >= 2.0 * std::numbers::pi - 1e-9) {
        return static_cast<int>(std::lround(2.0 * std::numbers::pi / azimuth_step));
    }
    return static_cast<int>(std::floor(fov / azimuth_step + 1e-9)) + 1;
}

double SensorModel::elevation(int beam) const {
    if (beams == 1) {
        return 0.5 * (elevation_min + elevation_max);
    }
    return elevation_min + (elevation_max - elevation_min) * beam / (beams - 1);
}

double SensorModel::azimuth(int column) const {
    if (fov >= 2.0 * std::numbers::pi - 1e-9) {
        return -std::numbers::pi + column * (2.0 * std::numbers::pi / azimuth_count());
    }
    return -0.5 * fov + column * azimuth_step;
}

SensorModel default_vehicle_sensor() {
    SensorModel s;
    s.beams = 16;
    s.fov = 2.0 * std::numbers::pi;
    s.azimuth_step = 0.4 * kDeg;
    s.max_range = 50.0;
    s.range_noise_sigma = 0.02;
    s.dropout_prob = 0.05;
    s.elevation_min = -15.0 * kDeg;
    s.elevation_max = 3.0 * kDeg;
    return s;
}

SensorModel default_infra_sensor() {
    SensorModel s;
    s.beams = 64;
    s.fov = 100.0 * kDeg;
    s.azimuth_step = 0.25 * kDeg;
    s.max_range = 80.0;
    s.range_noise_sigma = 0.02;
    s.dropout_prob = 0.05;
    // relative to the boresight, which the mount pitches down
    s.elevation_min = -30.0 * kDeg;
    s.elevation_max = 8.0 * kDeg;
    return s;
}

double ray_box_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const geom::Box3D& box) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double ox = origin.x() - box.x;
    const double oy = origin.y() - box.y;
    const double o[3] = {c * ox + s * oy, -s * ox + c * oy, origin.z() - box.z};
    const double d[3] = {c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z()};
    const double half[3] = {0.5 * box.l, 0.5 * box.w, 0.5 * box.h};
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-15) {
            if (std::abs(o[k]) > half[k]) {
                return -1.0;
            }
            continue;
        }
        double t0 = (-half[k] - o[k]) / d[k];
        double t1 = (half[k] - o[k]) / d[k];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
        if (t_near > t_far) {
            return -1.0;
        }
    }
    if (t_far <= 0.0) {
        return -1.0;
    }
    // a sensor inside a box sees nothing past its own shell
    return t_near > 0.0 ? t_near : -1.0;
}

PointCloud cast_cloud(const SensorModel& sensor, const geom::PoseSE3& sensor_pose,
                      std::span<const geom::Box3D> world_boxes, const WorldModel& world, Rng& rng,
                      bool noise_free) {
    sensor.validate();
    const Eigen::Matrix3d& r = sensor_pose.rotation();
    const Eigen::Vector3d& origin = sensor_pose.translation();
    const int columns = sensor.azimuth_count();
    PointCloud cloud;
    cloud.reserve(static_cast<std::size_t>(columns) * static_cast<std::size_t>(sensor.beams) / 2);

    for (int b = 0; b < sensor.beams; ++b) {
        const double el = sensor.elevation(b);
        const double ce = std::cos(el);
        const double se = std::sin(el);
        for (int a = 0; a < columns; ++a) {
            const double az = sensor.azimuth(a);
            const Eigen::Vector3d local(ce * std::cos(az), ce * std::sin(az), se);
            const Eigen::Vector3d dir = r * local;

            double hit = std::numeric_limits<double>::infinity();
            bool ground = false;
            if (dir.z() < -1e-12) {
                hit = -origin.z() / dir.z();
                ground = true;
            }
            for (const auto& box : world_boxes) {
                const double t = ray_box_entry(origin, dir, box);
                if (t > 0.0 && t < hit) {
                    hit = t;
                    ground = false;
                }
            }
            if (!(hit <= sensor.max_range)) {
                continue;
            }
            // fixed draw order per hit keeps the stream aligned regardless of outcomes
            const double noise = rng.normal();
            const double drop = rng.uniform();
            const double thin = rng.uniform();
            if (noise_free) {
                cloud.push_back({local.x() * hit, local.y() * hit, local.z() * hit,
                                 1.0 - 0.5 * hit / sensor.max_range});
                continue;
            }
            if (drop < sensor.dropout_prob || (ground && thin >= world.ground_return_prob)) {
                continue;
            }
            const double range = hit + sensor.range_noise_sigma * noise;
            if (!(range > 0.0) || range > sensor.max_range) {
                continue;
            }
            cloud.push_back({local.x() * range, local.y() * range, local.z() * range,
                             1.0 - 0.5 * range / sensor.max_range});
        }
    }
    return cloud;
}

}  // namespace dvx::sim
