#include "arcline/geometry.hpp"

#include "test_support.hpp"

#include <doctest.h>

using namespace arcline;
using test_support::deg;

TEST_CASE("compose: identity, inverse, pure translations") {
  Rng rng(11);
  const RigidTransform t = test_support::random_transform(rng);

  const RigidTransform it = compose(RigidTransform::identity(), t);
  CHECK((it.rotation() - t.rotation()).norm() < 1e-15);
  CHECK((it.translation() - t.translation()).norm() < 1e-15);

  const RigidTransform round = compose(t, t.inverse());
  CHECK((round.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(round.translation().cwiseAbs().maxCoeff() < 1e-9);

  const RigidTransform sum =
      compose(RigidTransform::translate(1, 0, 0), RigidTransform::translate(0, 2, 0));
  CHECK((sum.translation() - Vec3(1, 2, 0)).norm() < 1e-15);
  CHECK((sum.rotation() - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("compose order matches sequential application") {
  Rng rng(12);
  for (int k = 0; k < 20; ++k) {
    const RigidTransform a = test_support::random_transform(rng);
    const RigidTransform b = test_support::random_transform(rng);
    const Vec3 p = test_support::random_vec3(rng, 50.0);
    CHECK((compose(a, b).apply(p) - a.apply(b.apply(p))).norm() < 1e-9);
  }
}

TEST_CASE("transform_point basics") {
  CHECK((transform_point(RigidTransform::identity(), Vec3(1, 2, 3)) - Vec3(1, 2, 3)).norm() == 0.0);
  CHECK((transform_point(RigidTransform::rot_z(deg(90)), Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() <
        1e-12);
  CHECK((transform_point(RigidTransform::translate(0, 0, 5), Vec3(0, 0, 0)) - Vec3(0, 0, 5)).norm() ==
        0.0);
}

TEST_CASE("transform_point preserves pairwise distances") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    const RigidTransform t = test_support::random_transform(rng);
    const Vec3 p = test_support::random_vec3(rng, 100.0);
    const Vec3 q = test_support::random_vec3(rng, 100.0);
    CHECK(std::abs((t.apply(p) - t.apply(q)).norm() - (p - q).norm()) < 1e-9);
  }
}

TEST_CASE("rotation-group closure over 1e4 compositions") {
  Rng rng(14);
  RigidTransform acc;
  for (int k = 0; k < 10000; ++k) {
    acc = compose(acc, test_support::random_transform(rng, 1.0));
  }
  CHECK(orthonormality_drift(acc.rotation()) < 1e-9);
  CHECK(std::abs(acc.rotation().determinant() - 1.0) < 1e-9);
}

TEST_CASE("RigidTransform rejects invalid rotations") {
  Mat3 skewed = Mat3::Identity();
  skewed(0, 1) = 1e-3;
  CHECK_THROWS_AS(RigidTransform(skewed, Vec3::Zero()), std::invalid_argument);

  Mat3 mirror = Mat3::Identity();
  mirror(2, 2) = -1.0;
  CHECK_THROWS_AS(RigidTransform(mirror, Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("Line3 normalizes and validates the direction") {
  const Line3 l(Vec3(1, 1, 1), Vec3(2, 0, 0));
  CHECK(l.direction().isApprox(Vec3(1, 0, 0)));
  CHECK(std::abs(l.direction().norm() - 1.0) < 1e-12);
  CHECK_THROWS_AS(Line3(Vec3::Zero(), Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("laser_point examples and unit-speed property") {
  CHECK((laser_point(Line3(Vec3(0, 0, 0), Vec3(0, 0, 1)), 0.0) - Vec3(0, 0, 0)).norm() == 0.0);
  CHECK((laser_point(Line3(Vec3(1, 1, 1), Vec3(1, 0, 0)), 2.0) - Vec3(3, 1, 1)).norm() < 1e-15);

  Rng rng(15);
  for (int k = 0; k < 100; ++k) {
    const Line3 l(test_support::random_vec3(rng, 50.0), test_support::random_unit(rng));
    const double lambda = rng.uniform(-200.0, 200.0);
    CHECK(std::abs((laser_point(l, lambda) - laser_point(l, 0.0)).norm() - std::abs(lambda)) < 1e-9);
  }
}

TEST_CASE("TrusGeometry and PmObservation validation") {
  CHECK_THROWS_AS(TrusGeometry(1, 0.3, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(TrusGeometry(128, -0.1, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(TrusGeometry(128, 0.3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(PmObservation(0.0, 0.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(PmObservation(NAN, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("element_position: direct values and the index helper") {
  const TrusGeometry g(128, 0.3, 10.0);
  CHECK(g.element_lateral_mm(0) == doctest::Approx(-19.05).epsilon(1e-12));
  CHECK((element_position(g, 0.0, -19.05) - Vec3(-19.05, 0.0, 10.0)).norm() < 1e-12);
  CHECK((element_position(g, deg(90), 0.0) - Vec3(0.0, 10.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("pm_position: direct values and arc-radius invariance") {
  const TrusGeometry g(128, 0.3, 10.0);
  CHECK((pm_position(g, PmObservation(0.0, 0.0, 30.0), 0.0) - Vec3(0, 0, 40)).norm() < 1e-12);
  CHECK((pm_position(g, PmObservation(deg(90), 5.0, 20.0), 0.0) - Vec3(5, 30, 0)).norm() < 1e-12);
  CHECK(std::abs((pm_position(g, PmObservation(0.0, 0.0, 30.0), deg(6)) - Vec3(0, 0, 10)).norm() -
                 30.0) < 1e-12);

  Rng rng(16);
  for (int k = 0; k < 300; ++k) {
    const PmObservation obs(rng.uniform(-1.0, 1.0), rng.uniform(-19.0, 19.0), rng.uniform(0.0, 80.0));
    const double dtheta = rng.uniform(-M_PI, M_PI);
    const Vec3 elem = element_position(g, obs.scan_angle_rad, obs.lateral_mm);
    CHECK(std::abs((pm_position(g, obs, dtheta) - elem).norm() - obs.radius_mm) < 1e-9);
  }
}
