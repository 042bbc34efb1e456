#include "arcline/tracking.hpp"

#include "arcline/registration.hpp"
#include "arcline/simulation.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace arcline;
using test_support::deg;

namespace {

const TrusGeometry kProbe(128, 0.3, 10.0);

// A single consistent pair: source on the arc at scan + delta, line through
// the source from a random direction.
tracking::TrackingQuery query_for(double delta_true_rad, const RigidTransform& f_reg, Rng& rng) {
  const PmObservation obs(rng.uniform(-0.5, 0.5), rng.uniform(-10.0, 10.0), rng.uniform(15.0, 55.0));
  const Vec3 source_trus = pm_position(kProbe, obs, delta_true_rad);
  const Vec3 source_cam = f_reg.inverse().apply(source_trus);
  const Vec3 dir = test_support::random_unit(rng);
  return {f_reg, Line3(source_cam - 60.0 * dir, dir), obs, kProbe, deg(6)};
}

}  // namespace

TEST_CASE("track: in-plane marker gives zero rotation") {
  Rng rng(61);
  for (int rep = 0; rep < 20; ++rep) {
    const RigidTransform f = test_support::random_transform(rng);
    const auto result = tracking::track(query_for(0.0, f, rng));
    CHECK(std::abs(result.delta_theta_rad) < 1e-6);
    CHECK(result.residual_mm < 1e-8);
  }
}

TEST_CASE("track: recovers a 4-degree deviation exactly") {
  Rng rng(62);
  for (int rep = 0; rep < 20; ++rep) {
    const RigidTransform f = test_support::random_transform(rng);
    const auto result = tracking::track(query_for(deg(4), f, rng));
    CHECK(std::abs(result.delta_theta_rad - deg(4)) < 1e-4);
  }
}

TEST_CASE("track: result always within the slice-thickness bound") {
  Rng rng(63);
  for (int rep = 0; rep < 100; ++rep) {
    const RigidTransform f = test_support::random_transform(rng);
    // Arbitrary (inconsistent) query: line unrelated to the arc.
    tracking::TrackingQuery q{
        f, Line3(test_support::random_vec3(rng, 80.0), test_support::random_unit(rng)),
        PmObservation(rng.uniform(-0.6, 0.6), rng.uniform(-15.0, 15.0), rng.uniform(5.0, 60.0)),
        kProbe, deg(6)};
    const auto result = tracking::track(q);
    CHECK(std::abs(result.delta_theta_rad) <= deg(6) + 1e-12);
    CHECK(result.lambda_mm >= 0.0);
  }
}

TEST_CASE("track agrees with the pairs of a zero-cost registration") {
  sim::SimConfig config;
  config.noise = sim::NoiseModel::zero();
  Rng rng(64);
  const sim::Scene scene = sim::generate_scene(config, rng, 10);
  std::vector<registration::RegistrationPair> pairs;
  for (const auto& sp : scene.pairs) pairs.push_back({sp.laser_line, sp.obs});
  registration::RegistrationProblem prob(pairs, scene.geometry, deg(6), 50.0);
  const auto reg = registration::solve(prob);
  REQUIRE(reg.final_cost_mm < 1e-6);

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto result = tracking::track(
        {reg.f_reg, pairs[i].laser_line, pairs[i].obs, scene.geometry, deg(6)});
    const double solved_delta = reg.thetas_rad[i] - pairs[i].obs.scan_angle_rad;
    CHECK(std::abs(result.delta_theta_rad - solved_delta) < 1e-6);
  }
}

TEST_CASE("plane_deviation_mm: reference values, linearity, validation") {
  const double at30 = tracking::plane_deviation_mm(deg(1), 30.0);
  CHECK(at30 == 30.0 * deg(1));          // exact arc length
  CHECK(at30 == doctest::Approx(0.524).epsilon(1e-3));
  CHECK(tracking::plane_deviation_mm(deg(1), 60.0) == doctest::Approx(1.047).epsilon(1e-3));
  CHECK(tracking::plane_deviation_mm(0.0, 42.0) == 0.0);

  Rng rng(65);
  for (int rep = 0; rep < 50; ++rep) {
    const double a = rng.uniform(0.0, 0.2), d = rng.uniform(1.0, 100.0), k = rng.uniform(0.1, 5.0);
    CHECK(tracking::plane_deviation_mm(k * a, d) == doctest::Approx(k * tracking::plane_deviation_mm(a, d)));
    CHECK(tracking::plane_deviation_mm(a, k * d) == doctest::Approx(k * tracking::plane_deviation_mm(a, d)));
  }
  CHECK_THROWS_AS(tracking::plane_deviation_mm(0.1, 0.0), std::invalid_argument);
}
