#include "arcline/geometry.hpp"

#include <cmath>

namespace arcline {

namespace {
constexpr double kDriftReproject = 1e-12;
constexpr double kDriftReject = 1e-9;
}  // namespace

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

double orthonormality_drift(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    throw std::invalid_argument("RigidTransform: non-finite entries");
  }
  const double drift = orthonormality_drift(rotation_);
  if (drift >= kDriftReject || std::abs(rotation_.determinant() - 1.0) >= kDriftReject) {
    throw std::invalid_argument("RigidTransform: rotation is not orthonormal");
  }
  if (drift > kDriftReproject) {
    rotation_ = nearest_rotation(rotation_);
  }
}

RigidTransform RigidTransform::translate(double x, double y, double z) {
  return RigidTransform(Mat3::Identity(), Vec3(x, y, z));
}

RigidTransform RigidTransform::rot_x(double angle_rad) {
  return RigidTransform(Eigen::AngleAxisd(angle_rad, Vec3::UnitX()).toRotationMatrix(), Vec3::Zero());
}

RigidTransform RigidTransform::rot_y(double angle_rad) {
  return RigidTransform(Eigen::AngleAxisd(angle_rad, Vec3::UnitY()).toRotationMatrix(), Vec3::Zero());
}

RigidTransform RigidTransform::rot_z(double angle_rad) {
  return RigidTransform(Eigen::AngleAxisd(angle_rad, Vec3::UnitZ()).toRotationMatrix(), Vec3::Zero());
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis_angle, const Vec3& translation) {
  const double angle = axis_angle.norm();
  Mat3 r;
  if (angle < 1e-300) {
    r = Mat3::Identity();
  } else {
    r = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
  }
  return RigidTransform(r, translation);
}

RigidTransform RigidTransform::inverse() const {
  Mat3 rt = rotation_.transpose();
  return RigidTransform(rt, -(rt * translation_));
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return RigidTransform(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

Vec3 transform_point(const RigidTransform& t, const Vec3& p) { return t.apply(p); }

Line3::Line3(const Vec3& origin, const Vec3& direction) : origin_(origin) {
  if (!origin.allFinite() || !direction.allFinite()) {
    throw std::invalid_argument("Line3: non-finite entries");
  }
  const double n = direction.norm();
  if (n < 1e-12) {
    throw std::invalid_argument("Line3: direction has near-zero length");
  }
  direction_ = direction / n;
}

double Line3::distance(const Vec3& p) const {
  const Vec3 d = p - origin_;
  return (d - direction_.dot(d) * direction_).norm();
}

Vec3 laser_point(const Line3& line, double lambda_mm) {
  return line.origin() + lambda_mm * line.direction();
}

TrusGeometry::TrusGeometry(int n_elements_, double pitch_mm_, double radius_mm_)
    : n_elements(n_elements_), pitch_mm(pitch_mm_), radius_mm(radius_mm_) {
  if (n_elements < 2 || !(pitch_mm > 0.0) || !(radius_mm > 0.0)) {
    throw std::invalid_argument("TrusGeometry: n_elements >= 2 and positive pitch/radius required");
  }
}

double TrusGeometry::element_lateral_mm(int index) const {
  return (-0.5 * (n_elements - 1) + index) * pitch_mm;
}

PmObservation::PmObservation(double scan_angle_rad_, double lateral_mm_, double radius_mm_)
    : scan_angle_rad(scan_angle_rad_), lateral_mm(lateral_mm_), radius_mm(radius_mm_) {
  if (!std::isfinite(scan_angle_rad) || !std::isfinite(lateral_mm) || !std::isfinite(radius_mm) ||
      radius_mm < 0.0) {
    throw std::invalid_argument("PmObservation: finite values and radius_mm >= 0 required");
  }
}

Vec3 element_position(const TrusGeometry& g, double theta_rad, double lateral_mm) {
  return Vec3(lateral_mm, std::sin(theta_rad) * g.radius_mm, std::cos(theta_rad) * g.radius_mm);
}

Vec3 pm_position(const TrusGeometry& g, const PmObservation& obs, double delta_theta_rad) {
  const double theta = obs.scan_angle_rad + delta_theta_rad;
  return element_position(g, obs.scan_angle_rad, obs.lateral_mm) +
         obs.radius_mm * Vec3(0.0, std::sin(theta), std::cos(theta));
}

}  // namespace arcline
