#include "dvx/geom/pose.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "dvx/core/error.hpp"

namespace dvx::geom {

namespace {

constexpr double kOrthoTol = 1e-9;

void check_rotation(const Eigen::Matrix3d& r) {
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = r.determinant();
    if (!(ortho < kOrthoTol) || !(std::abs(det - 1.0) <= kOrthoTol)) {
        std::ostringstream os;
        os << "rotation is not in SO(3): |R^T R - I|_inf = " << ortho << ", det = " << det;
        fail(ErrorKind::Data, os.str());
    }
}

}  // namespace

PoseSE3::PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
    check_rotation(rotation_);
    if (!translation_.allFinite()) {
        fail(ErrorKind::Data, "pose translation is not finite");
    }
}

PoseSE3 PoseSE3::from_yaw(double yaw, const Eigen::Vector3d& translation) {
    return {Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix(), translation};
}

PoseSE3 PoseSE3::from_ypr(double yaw, double pitch, double roll, const Eigen::Vector3d& translation) {
    const Eigen::Matrix3d r = (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                               Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
                                  .toRotationMatrix();
    return {r, translation};
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
    const Eigen::RowVector4d bottom = m.row(3);
    if (bottom != Eigen::RowVector4d(0, 0, 0, 1)) {
        fail(ErrorKind::Data, "homogeneous pose matrix must end with row (0, 0, 0, 1)");
    }
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d PoseSE3::matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

double PoseSE3::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
    Eigen::Matrix3d r = a.rotation() * b.rotation();
    // re-orthonormalize so long compose chains do not drift past the SO(3) tolerance
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    r = svd.matrixU() * svd.matrixV().transpose();
    return {r, a.rotation() * b.translation() + a.translation()};
}

PoseSE3 invert(const PoseSE3& a) {
    const Eigen::Matrix3d rt = a.rotation().transpose();
    return {rt, -(rt * a.translation())};
}

PointCloud transform_points(const PointCloud& cloud, const PoseSE3& pose) {
    PointCloud out;
    out.reserve(cloud.size());
    const Eigen::Matrix3d& r = pose.rotation();
    const Eigen::Vector3d& t = pose.translation();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud[i];
        if (!p.finite()) {
            fail(ErrorKind::Data, "transform_points: non-finite point at index " + std::to_string(i));
        }
        const Eigen::Vector3d q = r * Eigen::Vector3d(p.x, p.y, p.z) + t;
        out.push_back({q.x(), q.y(), q.z(), p.intensity});
    }
    return out;
}

bool approx_equal(const PoseSE3& a, const PoseSE3& b, double tol) {
    return (a.rotation() - b.rotation()).cwiseAbs().maxCoeff() <= tol &&
           (a.translation() - b.translation()).cwiseAbs().maxCoeff() <= tol;
}

double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) {
        a += two_pi;
    } else if (a > std::numbers::pi) {
        a -= two_pi;
    }
    return a;
}

}  // namespace dvx::geom
