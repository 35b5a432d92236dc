#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "dvx/core/point_cloud.hpp"

namespace dvx::geom {

/// Rigid transform p -> R p + t. The constructor rejects rotations that are not orthonormal
/// with unit determinant (tolerance 1e-9).
class PoseSE3 {
public:
    PoseSE3() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
    PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

    static PoseSE3 identity() { return {}; }
    static PoseSE3 from_yaw(double yaw, const Eigen::Vector3d& translation);
    /// Intrinsic Z-Y-X (yaw, then pitch, then roll) rotation.
    static PoseSE3 from_ypr(double yaw, double pitch, double roll, const Eigen::Vector3d& translation);
    /// Row-major 4x4 homogeneous matrix; the bottom row must be (0, 0, 0, 1).
    static PoseSE3 from_matrix(const Eigen::Matrix4d& m);

    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }
    Eigen::Matrix4d matrix() const;

    /// Heading of the rotated x-axis projected on the x-y plane.
    double yaw() const;

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

private:
    Eigen::Matrix3d rotation_;
    Eigen::Vector3d translation_;
};

/// a * b: applies b first, then a.
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert(const PoseSE3& a);

/// Maps xyz by the pose; intensity is carried over. Throws dvx::Error on non-finite input.
PointCloud transform_points(const PointCloud& cloud, const PoseSE3& pose);

bool approx_equal(const PoseSE3& a, const PoseSE3& b, double tol);

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

}  // namespace dvx::geom
