// Rigid-body, laser-line and transducer-arc geometry shared by all modules.
// Internal units are millimeters and radians throughout.

#ifndef ARCLINE_GEOMETRY_HPP
#define ARCLINE_GEOMETRY_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace arcline {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Projection of an arbitrary 3x3 matrix onto the nearest orthonormal
/// rotation (polar factor with positive determinant).
Mat3 nearest_rotation(const Mat3& m);

/// Frobenius norm of R^T R - I, the orthonormality drift measure.
double orthonormality_drift(const Mat3& r);

// SE(3) pose stored as rotation matrix + translation. Construction
// validates orthonormality to 1e-9 and silently re-projects drift
// above 1e-12 so long composition chains stay on the manifold.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return RigidTransform(); }
  static RigidTransform translate(double x, double y, double z);
  static RigidTransform rot_x(double angle_rad);
  static RigidTransform rot_y(double angle_rad);
  static RigidTransform rot_z(double angle_rad);
  /// Rodrigues exponential of an axis-angle vector, plus translation.
  static RigidTransform from_axis_angle(const Vec3& axis_angle, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }
  RigidTransform inverse() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
Vec3 transform_point(const RigidTransform& t, const Vec3& p);

// Parameterized laser beam: origin + lambda * direction, direction unit.
class Line3 {
 public:
  Line3(const Vec3& origin, const Vec3& direction);

  const Vec3& origin() const { return origin_; }
  const Vec3& direction() const { return direction_; }

  /// Orthogonal projection parameter of p onto the line.
  double project(const Vec3& p) const { return direction_.dot(p - origin_); }
  /// Perpendicular distance from p to the line.
  double distance(const Vec3& p) const;

 private:
  Vec3 origin_;
  Vec3 direction_;
};

Vec3 laser_point(const Line3& line, double lambda_mm);

// Curvilinear transducer array: element count, pitch and arc radius.
// The transducer frame is stationary; the array rotates within it.
struct TrusGeometry {
  TrusGeometry(int n_elements, double pitch_mm, double radius_mm);

  int n_elements;
  double pitch_mm;
  double radius_mm;

  /// Lateral coordinate of element index i, centered on the array.
  double element_lateral_mm(int index) const;
};

// One detected photoacoustic marker: the scan angle at which the signal
// was received, the continuous lateral position along the array, and the
// propagation distance from element to source (the arc radius).
struct PmObservation {
  PmObservation(double scan_angle_rad, double lateral_mm, double radius_mm);

  double scan_angle_rad;
  double lateral_mm;
  double radius_mm;
};

/// Element position at scan angle theta: [lateral, sin(theta)*r, cos(theta)*r].
Vec3 element_position(const TrusGeometry& g, double theta_rad, double lateral_mm);

/// Source position on the arc of radius r_PM around the receiving element,
/// deviated by delta_theta from the scan angle. delta_theta = 0 is the
/// in-plane assumption.
Vec3 pm_position(const TrusGeometry& g, const PmObservation& obs, double delta_theta_rad);

}  // namespace arcline

#endif  // ARCLINE_GEOMETRY_HPP
