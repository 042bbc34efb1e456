// Shared generators for the test suites. Kept independent of the library's
// scene machinery so the oracles do not share code with what they check.

#ifndef ARCLINE_TEST_SUPPORT_HPP
#define ARCLINE_TEST_SUPPORT_HPP

#include "arcline/geometry.hpp"
#include "arcline/rng.hpp"

#include <cmath>

namespace test_support {

using arcline::Mat3;
using arcline::Rng;
using arcline::Vec3;

inline double deg(double d) { return d * M_PI / 180.0; }

inline Vec3 random_vec3(Rng& rng, double half_range) {
  return Vec3(rng.uniform(-half_range, half_range), rng.uniform(-half_range, half_range),
              rng.uniform(-half_range, half_range));
}

inline Vec3 random_unit(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

inline Mat3 random_rotation_matrix(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  Eigen::Quaterniond q(b * std::cos(2.0 * M_PI * u3), a * std::sin(2.0 * M_PI * u2),
                       a * std::cos(2.0 * M_PI * u2), b * std::sin(2.0 * M_PI * u3));
  return q.normalized().toRotationMatrix();
}

inline arcline::RigidTransform random_transform(Rng& rng, double translation_range = 100.0) {
  return arcline::RigidTransform(random_rotation_matrix(rng), random_vec3(rng, translation_range));
}

}  // namespace test_support

#endif  // ARCLINE_TEST_SUPPORT_HPP
