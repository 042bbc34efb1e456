#include "arcline/simulation.hpp"

#include "arcline/parallel.hpp"
#include "arcline/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arcline::sim {

namespace {

Mat3 random_rotation(Rng& rng) {
  // Shoemake's uniform quaternion sampling.
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(2.0 * M_PI * u3), a * std::sin(2.0 * M_PI * u2),
                             a * std::cos(2.0 * M_PI * u2), b * std::sin(2.0 * M_PI * u3));
  return q.normalized().toRotationMatrix();
}

Vec3 random_unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return Vec3(s * std::cos(phi), s * std::sin(phi), z);
}

// Unit vector within half_angle of +z.
Vec3 random_cone_vector(double half_angle_rad, Rng& rng) {
  const double c = rng.uniform(std::cos(half_angle_rad), 1.0);
  const double phi = rng.uniform(0.0, 2.0 * M_PI);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return Vec3(s * std::cos(phi), s * std::sin(phi), c);
}

// marker -> camera pose whose marker +z maps to beam_dir, with the given
// roll about the beam, and whose marker origin lands on fiber_head.
RigidTransform fiber_pose_from_beam(const Vec3& fiber_head, const Vec3& beam_dir, double roll_rad) {
  const Mat3 align = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), beam_dir).toRotationMatrix();
  const Mat3 rot = align * Eigen::AngleAxisd(roll_rad, Vec3::UnitZ()).toRotationMatrix();
  return RigidTransform(rot, fiber_head);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

long ceil_with_slack(double x) { return static_cast<long>(std::ceil(x - 1e-9)); }

}  // namespace

NoiseModel NoiseModel::zero() {
  NoiseModel n;
  n.marker_mean_mm = Vec3::Zero();
  n.marker_sigma_trans_mm = Vec3::Zero();
  n.marker_sigma_rot_rad = Vec3::Zero();
  n.aim_sigma_mm = {0.0, 0.0};
  return n;
}

void NoiseModel::validate() const {
  const bool ok = (marker_sigma_trans_mm.array() >= 0.0).all() &&
                  (marker_sigma_rot_rad.array() >= 0.0).all() && aim_sigma_mm[0] >= 0.0 &&
                  aim_sigma_mm[1] >= 0.0;
  if (!ok) throw std::invalid_argument("NoiseModel: sigmas must be non-negative");
}

SimConfig SimConfig::benchtop_experiment() {
  SimConfig config;
  config.apply_detectability_gate = true;
  config.standoff_range_mm = {30.0, 70.0};
  config.depth_range_mm = {20.0, 50.0};
  config.n_pairs = 15;
  config.evenly_spaced_scans = true;
  return config;
}

void SimConfig::validate() const {
  noise.validate();
  if (trials < 1) throw std::invalid_argument("SimConfig: trials must be >= 1");
  if (n_pairs < 3) throw std::invalid_argument("SimConfig: n_pairs must be >= 3");
  if (holdout_pairs < 1) throw std::invalid_argument("SimConfig: holdout_pairs must be >= 1");
  if (!(theta_bound_rad > 0.0)) throw std::invalid_argument("SimConfig: theta_bound_rad must be > 0");
  if (deviation_range_rad < 0.0) {
    throw std::invalid_argument("SimConfig: deviation_range_rad must be >= 0");
  }
}

RigidTransform perturb_marker_pose(const RigidTransform& pose, const NoiseModel& noise, Rng& rng) {
  Vec3 dt;
  for (int k = 0; k < 3; ++k) {
    dt(k) = noise.marker_mean_mm(k) + rng.gaussian(0.0, noise.marker_sigma_trans_mm(k));
  }
  const double ex = rng.gaussian(0.0, noise.marker_sigma_rot_rad.x());
  const double ey = rng.gaussian(0.0, noise.marker_sigma_rot_rad.y());
  const double ez = rng.gaussian(0.0, noise.marker_sigma_rot_rad.z());
  const Mat3 perturb = (Eigen::AngleAxisd(ez, Vec3::UnitZ()) * Eigen::AngleAxisd(ey, Vec3::UnitY()) *
                        Eigen::AngleAxisd(ex, Vec3::UnitX()))
                           .toRotationMatrix();
  return RigidTransform(perturb * pose.rotation(), pose.translation() + dt);
}

Vec3 perturb_aim(const Vec3& spot_on_board, const BoardFrame& board, const NoiseModel& noise,
                 Rng& rng) {
  const double du = rng.gaussian(0.0, noise.aim_sigma_mm[0]);
  const double dv = rng.gaussian(0.0, noise.aim_sigma_mm[1]);
  return spot_on_board + du * board.axis_u + dv * board.axis_v;
}

bool detectability(double delta_theta_rad, double theta_max_rad) {
  if (!(theta_max_rad > 0.0)) throw std::invalid_argument("detectability: theta_max must be > 0");
  return std::abs(delta_theta_rad) <= theta_max_rad;
}

std::pair<long, long> search_step_estimate(double fov_rad, double theta_max_rad,
                                           double actuator_res_rad) {
  if (!(fov_rad > 0.0) || !(theta_max_rad > 0.0) || !(actuator_res_rad > 0.0)) {
    throw std::invalid_argument("search_step_estimate: all arguments must be positive");
  }
  const long windows = ceil_with_slack(fov_rad / (2.0 * theta_max_rad));
  const long fine = ceil_with_slack(2.0 * theta_max_rad / actuator_res_rad);
  return {windows + fine, windows};
}

Scene generate_scene(const SimConfig& config, Rng& rng, int n_pairs, int n_gated_extra) {
  config.validate();
  const int n = n_pairs > 0 ? n_pairs : config.n_pairs;

  Scene scene;
  scene.geometry = config.geometry;
  scene.line_marker = Line3(Vec3::Zero(), Vec3::UnitZ());
  scene.f_reg_true = RigidTransform(
      random_rotation(rng), Vec3(rng.uniform(-config.translation_box_mm, config.translation_box_mm),
                                 rng.uniform(-config.translation_box_mm, config.translation_box_mm),
                                 rng.uniform(-config.translation_box_mm, config.translation_box_mm)));
  const RigidTransform trus_to_camera = scene.f_reg_true.inverse();

  scene.pairs.reserve(static_cast<std::size_t>(n + n_gated_extra));
  for (int i = 0; i < n + n_gated_extra; ++i) {
    const bool gated = config.apply_detectability_gate || i >= n;
    double delta = 0.0;
    int attempts = 0;
    do {
      if (++attempts > 10000) throw std::runtime_error("infeasible scene config");
      delta = config.deviation_range_rad > 0.0
                  ? rng.uniform(-config.deviation_range_rad, config.deviation_range_rad)
                  : 0.0;
    } while (gated && !detectability(delta, config.theta_bound_rad));

    const int total = n + n_gated_extra;
    const double slot = 2.0 * config.scan_range_rad / total;
    const double theta_scan =
        config.evenly_spaced_scans
            ? -config.scan_range_rad + (i + 0.5 + rng.uniform(-0.25, 0.25)) * slot
            : rng.uniform(-config.scan_range_rad, config.scan_range_rad);
    const double lateral = rng.uniform(-config.lateral_range_mm, config.lateral_range_mm);
    const double radius = rng.uniform(config.depth_range_mm[0], config.depth_range_mm[1]);
    const PmObservation obs(theta_scan, lateral, radius);

    const Vec3 source_trus = pm_position(scene.geometry, obs, delta);
    const Vec3 source_camera = trus_to_camera.apply(source_trus);

    // Beam direction within a cone of the inward radial ray at the source,
    // so the laser faces the imaging plane instead of grazing it.
    const double theta_true = obs.scan_angle_rad + delta;
    const Vec3 radial_trus(0.0, std::sin(theta_true), std::cos(theta_true));
    const Vec3 inward_camera = trus_to_camera.rotation() * (-radial_trus);
    const Mat3 to_inward =
        Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), inward_camera).toRotationMatrix();
    const Vec3 beam_dir = to_inward * random_cone_vector(config.beam_incidence_halfangle_rad, rng);

    const double lambda = rng.uniform(config.standoff_range_mm[0], config.standoff_range_mm[1]);
    const Vec3 fiber_head = source_camera - lambda * beam_dir;
    const RigidTransform pose = fiber_pose_from_beam(fiber_head, beam_dir, rng.uniform(0.0, 2.0 * M_PI));

    scene.pairs.push_back(
        {pose, Line3(fiber_head, beam_dir), obs, delta, lambda, source_camera});
  }
  return scene;
}

CalibrationScene generate_calibration_scene(int n_poses, const SimConfig& config, Rng& rng) {
  config.validate();
  if (n_poses < 3) throw std::invalid_argument("generate_calibration_scene: n_poses must be >= 3");

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double board_z = rng.uniform(config.board_distance_mm[0], config.board_distance_mm[1]);
    const Vec3 corner(rng.uniform(-config.board_halfwidth_mm, config.board_halfwidth_mm),
                      rng.uniform(-config.board_halfwidth_mm, config.board_halfwidth_mm), board_z);
    const BoardFrame board{corner, Vec3::UnitX(), Vec3::UnitY()};

    std::vector<RigidTransform> noisy_fmc;
    std::vector<Vec3> true_spots;
    double max_lambda = 0.0;
    for (int i = 0; i < n_poses; ++i) {
      const Vec3 hit = perturb_aim(corner, board, config.noise, rng);
      const double standoff = rng.uniform(config.calib_standoff_mm[0], config.calib_standoff_mm[1]);
      const Vec3 beam_dir = random_cone_vector(config.fiber_cone_halfangle_rad, rng);
      const Vec3 fiber_head = hit - standoff * beam_dir;
      const RigidTransform pose =
          fiber_pose_from_beam(fiber_head, beam_dir, rng.uniform(0.0, 2.0 * M_PI));

      true_spots.push_back(pose.inverse().apply(hit));
      max_lambda = std::max(max_lambda, standoff);
      noisy_fmc.push_back(perturb_marker_pose(pose, config.noise, rng).inverse());
    }

    try {
      return CalibrationScene{CalibrationInput(std::move(noisy_fmc), corner),
                              std::move(true_spots), Line3(Vec3::Zero(), Vec3::UnitZ()),
                              max_lambda};
    } catch (const std::invalid_argument&) {
      // Re-draw on a (vanishingly rare) pose-separation violation.
    }
  }
  throw std::runtime_error("infeasible scene config");
}

double line_recovery_error_mm(const Line3& fitted, const Line3& truth, double max_lambda_mm) {
  constexpr int kSamples = 64;
  double acc = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    const double lambda = max_lambda_mm * static_cast<double>(k) / (kSamples - 1);
    acc += fitted.distance(laser_point(truth, lambda));
  }
  return acc / kSamples;
}

CalibSweepResult run_calibration_sweep(const SimConfig& config) {
  config.validate();
  CalibSweepResult result;
  for (std::size_t s = 0; s < config.pose_counts.size(); ++s) {
    const int n_poses = config.pose_counts[s];
    auto rows = run_trials<CalibTrialRow>(config.trials, config.parallel, [&, s](int trial) {
      Rng rng = Rng::stream(config.master_seed, s, static_cast<std::uint64_t>(trial));
      const CalibrationScene scene = generate_calibration_scene(n_poses, config, rng);
      const LaserCalibration calib = calibrate(scene.input);
      return CalibTrialRow{
          n_poses, trial,
          line_recovery_error_mm(calib.line_marker, scene.true_line_marker, scene.max_lambda_mm),
          calib.residual_mm};
    });

    std::vector<double> errs, fits;
    for (const auto& row : rows) {
      errs.push_back(row.line_error_mm);
      fits.push_back(row.fit_residual_mm);
    }
    const double mean = mean_of(errs);
    result.summary.push_back({n_poses, mean, sample_std(errs, mean), mean_of(fits)});
    result.trials.insert(result.trials.end(), rows.begin(), rows.end());
  }
  return result;
}

RegSweepResult run_registration_sweep(const SimConfig& config) {
  config.validate();
  RegSweepResult result;
  for (std::size_t s = 0; s < config.deviation_sweep_rad.size(); ++s) {
    const double deviation = config.deviation_sweep_rad[s];
    // The solver must be allowed the full deviation range it is being
    // stressed with; at zero deviation the angles are effectively pinned.
    const double solver_bound = std::max(deviation, 1e-6);

    auto rows = run_trials<RegTrialRow>(config.trials, config.parallel, [&, s](int trial) {
      Rng rng = Rng::stream(config.master_seed, 0x100 + s, static_cast<std::uint64_t>(trial));
      SimConfig scene_cfg = config;
      scene_cfg.deviation_range_rad = deviation;
      scene_cfg.apply_detectability_gate = config.apply_detectability_gate;
      // Held-out pairs model detected observations: their true deviation
      // stays within the slice-thickness bound and their single-pair evaluation
      // uses the physical bound, whatever deviation stresses the fit set.
      const Scene scene = generate_scene(scene_cfg, rng, config.n_pairs, config.holdout_pairs);

      std::vector<registration::RegistrationPair> pairs;
      pairs.reserve(scene.pairs.size());
      for (const auto& sp : scene.pairs) {
        const RigidTransform noisy = perturb_marker_pose(sp.fiber_pose, config.noise, rng);
        pairs.push_back({Line3(noisy.apply(scene.line_marker.origin()),
                               noisy.rotate(scene.line_marker.direction())),
                         sp.obs});
      }

      std::vector<registration::RegistrationPair> fit(pairs.begin(),
                                                      pairs.begin() + config.n_pairs);
      std::vector<registration::RegistrationPair> holdout(pairs.begin() + config.n_pairs,
                                                          pairs.end());
      registration::RegistrationProblem prob(std::move(fit), scene.geometry, solver_bound,
                                             config.lambda_init_mm);
      const auto reg = registration::solve(prob);
      const auto stats =
          eval::tre_solved(reg.f_reg, holdout, scene.geometry, config.theta_bound_rad);
      return RegTrialRow{deviation, trial, stats.mean_mm, reg.outer_iterations, reg.converged};
    });

    std::vector<double> tres;
    double iters = 0.0;
    for (const auto& row : rows) {
      tres.push_back(row.tre_mm);
      iters += row.outer_iterations;
    }
    const double mean = mean_of(tres);
    result.summary.push_back(
        {deviation, mean, sample_std(tres, mean), iters / static_cast<double>(rows.size())});
    result.trials.insert(result.trials.end(), rows.begin(), rows.end());
  }
  return result;
}

eval::Dataset simulate_dataset(const SimConfig& config, Rng& rng, int n_pairs) {
  const Scene scene = generate_scene(config, rng, n_pairs);

  eval::Dataset ds;
  ds.geometry = scene.geometry;
  ds.seed = config.master_seed;
  ds.description = "simulated acquisition campaign";
  ds.calibration = LaserCalibration{scene.line_marker, 0.0, {}, {}};

  eval::Dataset::GroundTruth truth;
  truth.f_reg = scene.f_reg_true;
  for (const auto& sp : scene.pairs) {
    PmObservation obs = sp.obs;
    double delta = sp.delta_theta_true_rad;
    if (config.theta_quant_rad > 0.0) {
      // The transducer stopped on a quantized search increment; the source
      // itself does not move, so the element, radius and deviation are
      // recomputed about the snapped angle.
      const double snapped =
          std::round(obs.scan_angle_rad / config.theta_quant_rad) * config.theta_quant_rad;
      const Vec3 source = scene.f_reg_true.apply(sp.source_camera);
      const Vec3 radial = source - element_position(scene.geometry, snapped, obs.lateral_mm);
      const double radius = std::hypot(radial.y(), radial.z());
      obs = PmObservation(snapped, obs.lateral_mm, radius);
      delta = std::atan2(radial.y(), radial.z()) - snapped;
    }
    ds.marker_poses.push_back(perturb_marker_pose(sp.fiber_pose, config.noise, rng).inverse());
    ds.observations.push_back(obs);
    truth.lambdas_mm.push_back(sp.lambda_true_mm);
    truth.delta_thetas_rad.push_back(delta);
  }
  ds.ground_truth = std::move(truth);
  ds.validate();
  return ds;
}

}  // namespace arcline::sim
