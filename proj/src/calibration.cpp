#include "arcline/calibration.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>

namespace arcline {

namespace {

// Relative rotation angle between two poses, in radians.
double rotation_angle_between(const RigidTransform& a, const RigidTransform& b) {
  const Mat3 rel = a.rotation() * b.rotation().transpose();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

constexpr double kMinPoseSeparationRad = 0.5 * M_PI / 180.0;

}  // namespace

CalibrationInput::CalibrationInput(std::vector<RigidTransform> marker_poses_, const Vec3& spot_camera_)
    : marker_poses(std::move(marker_poses_)), spot_camera(spot_camera_) {
  if (marker_poses.size() < 3) {
    throw std::invalid_argument("CalibrationInput: at least 3 marker poses required");
  }
}

std::vector<Vec3> spots_in_marker_frame(const CalibrationInput& input) {
  std::vector<Vec3> spots;
  spots.reserve(input.marker_poses.size());
  for (const auto& pose : input.marker_poses) {
    spots.push_back(pose.apply(input.spot_camera));
  }
  return spots;
}

std::pair<Line3, double> fit_line_svd(const std::vector<Vec3>& points) {
  if (points.size() < 2) {
    throw std::invalid_argument("fit_line_svd: at least 2 points required");
  }
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Eigen::MatrixXd centered(points.size(), 3);
  double spread = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    centered.row(i) = (points[i] - centroid).transpose();
    spread = std::max(spread, (points[i] - centroid).norm());
  }
  if (spread < 1e-9) {
    throw std::runtime_error("fit_line_svd: degenerate point set");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Vec3 direction = svd.matrixV().col(0);

  // Deterministic sign: positive component along first->last, falling back
  // through +z, +y, +x on exact ties.
  const Vec3 span = points.back() - points.front();
  double sign_ref = direction.dot(span);
  if (sign_ref == 0.0) sign_ref = direction.z();
  if (sign_ref == 0.0) sign_ref = direction.y();
  if (sign_ref == 0.0) sign_ref = direction.x();
  if (sign_ref < 0.0) direction = -direction;

  Line3 line(centroid, direction);
  double residual = 0.0;
  for (const auto& p : points) residual += line.distance(p);
  residual /= static_cast<double>(points.size());
  return {line, residual};
}

LaserCalibration calibrate(const CalibrationInput& input) {
  // Rotational diversity is what makes the pivot geometry observable, so
  // it is required here rather than at input construction.
  for (std::size_t i = 0; i < input.marker_poses.size(); ++i) {
    for (std::size_t j = i + 1; j < input.marker_poses.size(); ++j) {
      if (rotation_angle_between(input.marker_poses[i], input.marker_poses[j]) <
          kMinPoseSeparationRad) {
        throw std::invalid_argument("calibrate: poses " + std::to_string(i) + " and " +
                                    std::to_string(j) + " are not distinct (< 0.5 deg apart)");
      }
    }
  }
  const std::vector<Vec3> spots = spots_in_marker_frame(input);
  auto [line, residual] = fit_line_svd(spots);

  // Anchor the origin at the first sample's orthogonal projection onto
  // the fitted line.
  const Vec3 origin = line.origin() + line.project(spots.front()) * line.direction();
  Line3 anchored(origin, line.direction());

  LaserCalibration calib{anchored, residual, {}, {}};
  calib.per_point_residuals_mm.reserve(spots.size());
  for (const auto& p : spots) calib.per_point_residuals_mm.push_back(anchored.distance(p));
  if (input.marker_poses.size() < 5) {
    calib.warnings.push_back("calibration from fewer than 5 poses has little redundancy");
  }
  return calib;
}

Line3 laser_line_in_camera(const LaserCalibration& calib, const RigidTransform& marker_to_camera) {
  return Line3(marker_to_camera.apply(calib.line_marker.origin()),
               marker_to_camera.rotate(calib.line_marker.direction()));
}

}  // namespace arcline
