// Laser-beam calibration: recover the beam line in the fiducial-marker
// frame from repeated poses aimed at one fixed spot, pivot style.
//
// Frame convention, fixed once: F_MC maps camera coordinates to marker
// coordinates (spot_marker = F_MC * spot_camera). Wherever a marker-to-
// camera map is needed the caller passes the inverse explicitly.

#ifndef ARCLINE_CALIBRATION_HPP
#define ARCLINE_CALIBRATION_HPP

#include "arcline/geometry.hpp"

#include <string>
#include <vector>

namespace arcline {

struct CalibrationInput {
  /// marker_poses are F_MC^i, camera -> marker.
  CalibrationInput(std::vector<RigidTransform> marker_poses, const Vec3& spot_camera);

  std::vector<RigidTransform> marker_poses;
  Vec3 spot_camera;
};

struct LaserCalibration {
  /// Beam line in the marker frame; origin is the first sample projected
  /// onto the fitted line.
  Line3 line_marker;
  /// Mean point-to-line distance of the samples used in the fit.
  double residual_mm;
  std::vector<double> per_point_residuals_mm;
  std::vector<std::string> warnings;
};

/// spot_marker^i = F_MC^i * spot_camera for every pose.
std::vector<Vec3> spots_in_marker_frame(const CalibrationInput& input);

/// Total-least-squares 3-D line fit: origin at the centroid, direction
/// along the principal component of the centered points. The direction
/// sign is fixed so its component along (last - first) sample is
/// positive, ties broken toward +z then +y then +x. Returns the line and
/// the mean point-to-line distance.
std::pair<Line3, double> fit_line_svd(const std::vector<Vec3>& points);

LaserCalibration calibrate(const CalibrationInput& input);

/// Maps the calibrated line into the camera frame through a marker->camera
/// pose (the inverse of F_MC). Direction is renormalized after rotation.
Line3 laser_line_in_camera(const LaserCalibration& calib, const RigidTransform& marker_to_camera);

}  // namespace arcline

#endif  // ARCLINE_CALIBRATION_HPP
