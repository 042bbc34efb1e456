#include "arcline/tracking.hpp"

#include "arcline/registration.hpp"

#include <cmath>

namespace arcline::tracking {

double plane_deviation_mm(double angle_error_rad, double depth_mm) {
  if (!(depth_mm > 0.0)) {
    throw std::invalid_argument("plane_deviation_mm: depth must be positive");
  }
  return depth_mm * angle_error_rad;
}

TrackResult track(const TrackingQuery& query) {
  // Grid-seeded global solve of the (lambda, theta') pair, polished by
  // alternating the two exact 1-D updates.
  const registration::PairSolution sol = registration::solve_pair_variables(
      query.f_reg, query.laser_line, query.obs, query.geometry, query.theta_bound_rad);
  TrackResult result{sol.theta_prime_rad - query.obs.scan_angle_rad, sol.lambda_mm,
                     sol.residual_mm, sol.iterations};
  if (!sol.settled) {
    throw TrackingStallError("track: alternation did not settle", result);
  }
  return result;
}

}  // namespace arcline::tracking
