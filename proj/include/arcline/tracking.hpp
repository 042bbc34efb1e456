// Single-pair tracking: with F_reg known, recover the rotation that
// brings a currently out-of-plane photoacoustic marker in-plane.

#ifndef ARCLINE_TRACKING_HPP
#define ARCLINE_TRACKING_HPP

#include "arcline/geometry.hpp"

#include <stdexcept>

namespace arcline::tracking {

struct TrackingQuery {
  RigidTransform f_reg;
  Line3 laser_line;  // camera frame, from calibration + current marker pose
  PmObservation obs;
  TrusGeometry geometry;
  double theta_bound_rad;
};

struct TrackResult {
  double delta_theta_rad = 0.0;  // theta* - scan angle
  double lambda_mm = 0.0;
  double residual_mm = 0.0;
  int iterations = 0;
};

struct TrackingStallError : std::runtime_error {
  TrackingStallError(const std::string& msg, const TrackResult& best_so_far)
      : std::runtime_error(msg), best(best_so_far) {}
  TrackResult best;
};

/// Minimizes the single-pair cost over (lambda >= 0, theta' within the
/// slice-thickness bound) with F_reg fixed, by alternating the two exact
/// 1-D updates. Deterministic; throws TrackingStallError if the alternation
/// fails to settle.
TrackResult track(const TrackingQuery& query);

/// Arc length of an angular error at a given imaging depth.
double plane_deviation_mm(double angle_error_rad, double depth_mm);

}  // namespace arcline::tracking

#endif  // ARCLINE_TRACKING_HPP
