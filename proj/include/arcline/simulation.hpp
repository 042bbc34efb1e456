// Synthetic ground-truth scenes, the measurement noise models, and the
// Monte-Carlo sweeps reproducing the calibration and registration studies.

#ifndef ARCLINE_SIMULATION_HPP
#define ARCLINE_SIMULATION_HPP

#include "arcline/calibration.hpp"
#include "arcline/evaluation.hpp"
#include "arcline/geometry.hpp"
#include "arcline/rng.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace arcline::sim {

// Anisotropic marker-detection noise (non-zero mean translation bias,
// per-axis translation/rotation sigmas) plus the 2-D in-plane aiming
// noise used during calibration.
struct NoiseModel {
  Vec3 marker_mean_mm{0.1, 0.1, 0.1};
  Vec3 marker_sigma_trans_mm{0.1, 0.1, 0.8};
  Vec3 marker_sigma_rot_rad{0.01, 0.01, 0.01};
  std::array<double, 2> aim_sigma_mm{1.0, 1.0};

  static NoiseModel zero();
  void validate() const;
};

/// Translation gets mean + N(0, sigma) per camera axis; the rotation is
/// composed with small world-frame rotations about x, then y, then z.
RigidTransform perturb_marker_pose(const RigidTransform& pose, const NoiseModel& noise, Rng& rng);

// Flat aiming target: origin plus two orthonormal in-plane axes.
struct BoardFrame {
  Vec3 origin;
  Vec3 axis_u;
  Vec3 axis_v;
};

/// In-plane 2-D gaussian displacement of the aimed spot; no out-of-plane
/// component by construction.
Vec3 perturb_aim(const Vec3& spot_on_board, const BoardFrame& board, const NoiseModel& noise,
                 Rng& rng);

struct SimConfig {
  int n_pairs = 10;
  int holdout_pairs = 5;
  double deviation_range_rad = 6.0 * M_PI / 180.0;
  NoiseModel noise;
  int trials = 100;
  std::uint64_t master_seed = 12345;
  double theta_bound_rad = 6.0 * M_PI / 180.0;
  bool apply_detectability_gate = false;
  bool parallel = true;

  TrusGeometry geometry{128, 0.3, 10.0};
  double lambda_init_mm = 50.0;

  // Scene sampling ranges.
  double translation_box_mm = 100.0;
  double scan_range_rad = 35.0 * M_PI / 180.0;
  double lateral_range_mm = 15.0;
  std::array<double, 2> depth_range_mm{10.0, 60.0};
  std::array<double, 2> standoff_range_mm{40.0, 120.0};
  // The beam reaches the tissue from the camera side, roughly facing the
  // imaging plane; grazing incidence is excluded.
  double beam_incidence_halfangle_rad = 60.0 * M_PI / 180.0;
  // Spread scan angles evenly over the range (with jitter) instead of
  // sampling them independently, like a deliberate acquisition campaign.
  bool evenly_spaced_scans = false;
  // Snap simulated scan angles to this increment (0 = off), modeling a
  // manual search that stops on detection; radius and deviation are
  // re-derived so the source stays exactly on its line and arc.
  double theta_quant_rad = 0.0;

  // Calibration-scene sampling ranges.
  std::array<double, 2> board_distance_mm{150.0, 250.0};
  std::array<double, 2> calib_standoff_mm{70.0, 170.0};
  double board_halfwidth_mm = 30.0;
  double fiber_cone_halfangle_rad = 35.0 * M_PI / 180.0;

  // Sweep designs.
  std::vector<int> pose_counts{5, 10, 20, 30, 40};
  std::vector<double> deviation_sweep_rad{0.0, 5.0 * M_PI / 180.0, 10.0 * M_PI / 180.0,
                                          15.0 * M_PI / 180.0, 20.0 * M_PI / 180.0};

  void validate() const;

  /// Scene ranges for replicas of the physical experiment (laparoscopic
  /// workspace standoffs, imaging around 30 mm depth, detected PMs only)
  /// as opposed to the broad synthetic-sweep defaults above.
  static SimConfig benchtop_experiment();
};

// Per-pair ground truth of a synthetic scene. The laser line, the marker
// pose, and the arc observation are mutually consistent by construction.
struct ScenePair {
  RigidTransform fiber_pose;  // marker -> camera, noiseless
  Line3 laser_line;           // camera frame, noiseless
  PmObservation obs;
  double delta_theta_true_rad = 0.0;
  double lambda_true_mm = 0.0;
  Vec3 source_camera{0, 0, 0};
};

struct Scene {
  RigidTransform f_reg_true;  // camera -> transducer
  Line3 line_marker{Vec3::Zero(), Vec3::UnitZ()};  // calibrated beam, marker frame
  std::vector<ScenePair> pairs;
  TrusGeometry geometry{128, 0.3, 10.0};
};

/// Random ground-truth scene: uniform rotation, translation in the
/// configured box, sources on their lines and arcs within imaging depth.
/// With the detectability gate on, true deviations stay within the bound.
/// n_gated_extra appends that many pairs whose deviation is forced within
/// the bound regardless of the gate (held-out pairs model detected
/// observations).
Scene generate_scene(const SimConfig& config, Rng& rng, int n_pairs = -1, int n_gated_extra = 0);

/// An out-of-plane source is received iff |delta| <= theta_max (inclusive).
bool detectability(double delta_theta_rad, double theta_max_rad);

/// Worst-case search step counts over a field of view for an actuator of
/// the given resolution: (conventional fine search, slice-thickness windows).
std::pair<long, long> search_step_estimate(double fov_rad, double theta_max_rad,
                                           double actuator_res_rad);

// Calibration forward model: poses aimed at one board corner, with marker
// and aiming noise; ground truth kept for error measurement.
struct CalibrationScene {
  CalibrationInput input;
  std::vector<Vec3> true_spots_marker;
  Line3 true_line_marker;
  double max_lambda_mm;
};

CalibrationScene generate_calibration_scene(int n_poses, const SimConfig& config, Rng& rng);

/// Truth-referenced calibration accuracy: mean distance from the fitted
/// line to the true line, sampled along the beam from the fiber head to
/// the farthest spot.
double line_recovery_error_mm(const Line3& fitted, const Line3& truth, double max_lambda_mm);

struct CalibTrialRow {
  int n_poses = 0;
  int trial = 0;
  double line_error_mm = 0.0;
  double fit_residual_mm = 0.0;
};

struct CalibSweepRow {
  int n_poses = 0;
  double mean_error_mm = 0.0;
  double std_error_mm = 0.0;
  double mean_fit_residual_mm = 0.0;
};

struct CalibSweepResult {
  std::vector<CalibTrialRow> trials;
  std::vector<CalibSweepRow> summary;
};

CalibSweepResult run_calibration_sweep(const SimConfig& config);

struct RegTrialRow {
  double deviation_rad = 0.0;
  int trial = 0;
  double tre_mm = 0.0;
  int outer_iterations = 0;
  bool converged = true;
};

struct RegSweepRow {
  double deviation_rad = 0.0;
  double mean_tre_mm = 0.0;
  double std_tre_mm = 0.0;
  double mean_outer_iterations = 0.0;
};

struct RegSweepResult {
  std::vector<RegTrialRow> trials;
  std::vector<RegSweepRow> summary;
};

/// Full pipeline per trial: scene, marker noise, registration on n_pairs,
/// TRE on held-out pairs. The detectability gate is off by default here;
/// the solver's angle bound follows the deviation half-width.
RegSweepResult run_registration_sweep(const SimConfig& config);

/// One noisy acquisition campaign as a Dataset (true beam calibration,
/// noisy marker poses, exact arcs with hidden deviations, ground truth
/// attached).
eval::Dataset simulate_dataset(const SimConfig& config, Rng& rng, int n_pairs = -1);

}  // namespace arcline::sim

#endif  // ARCLINE_SIMULATION_HPP
