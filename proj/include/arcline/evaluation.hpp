// Dataset container, target-registration-error evaluation, and the
// fit/holdout and leave-one-out protocols.

#ifndef ARCLINE_EVALUATION_HPP
#define ARCLINE_EVALUATION_HPP

#include "arcline/calibration.hpp"
#include "arcline/geometry.hpp"
#include "arcline/registration.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace arcline::eval {

// One acquisition campaign: marker poses (F_MC, camera -> marker) paired
// with photoacoustic observations, plus the transducer geometry and an
// optional beam calibration. Simulated datasets may carry ground truth.
struct Dataset {
  std::vector<RigidTransform> marker_poses;
  std::vector<PmObservation> observations;
  TrusGeometry geometry{128, 0.3, 10.0};
  std::optional<LaserCalibration> calibration;
  std::optional<Vec3> spot_camera;
  std::string description;
  std::uint64_t seed = 0;

  struct GroundTruth {
    RigidTransform f_reg;
    std::vector<double> lambdas_mm;
    std::vector<double> delta_thetas_rad;
  };
  std::optional<GroundTruth> ground_truth;

  std::size_t size() const { return marker_poses.size(); }
  void validate() const;
};

/// Camera-frame laser lines for every acquisition: the calibrated
/// marker-frame line mapped through inverse(F_MC^i). Requires calibration.
std::vector<registration::RegistrationPair> dataset_pairs(const Dataset& ds);

struct EvalConfig {
  double theta_bound_rad = 6.0 * M_PI / 180.0;
  double lambda_init_mm = 50.0;
  int split_repeats = 1;
  registration::SolveConfig solver;
};

struct TreStats {
  double mean_mm = 0.0;
  double std_mm = 0.0;
  std::vector<double> per_point_mm;
};

/// Mean holdout mismatch with caller-supplied lambda/theta' (the literal
/// 1/n sum of transformed-line-point-to-arc-point distances).
TreStats tre(const RigidTransform& f_reg, const std::vector<registration::RegistrationPair>& holdout,
             const std::vector<double>& lambdas_mm, const std::vector<double>& thetas_rad,
             const TrusGeometry& geometry);

/// Same, but lambda/theta' for each holdout pair are obtained by solving
/// the single-pair problem with f_reg frozen (the tracking machinery).
TreStats tre_solved(const RigidTransform& f_reg,
                    const std::vector<registration::RegistrationPair>& holdout,
                    const TrusGeometry& geometry, double theta_bound_rad);

struct EvalReport {
  double tre_mean_mm = 0.0;
  double tre_std_mm = 0.0;
  std::vector<double> per_point_errors_mm;
  int n_fit = 0;
  int n_holdout = 0;
  double final_cost_mm = 0.0;
  double mean_outer_iterations = 0.0;
  bool all_converged = true;
};

/// Seeded uniform fit/holdout split (without replacement), registration on
/// the fit set, TRE on the rest. With split_repeats > 1 the mean/std are
/// taken across the repeated splits' means.
EvalReport fit_holdout_eval(const Dataset& ds, int n_fit, std::uint64_t selection_seed,
                            const EvalConfig& config);

struct LoocvResult {
  double mean_mm = 0.0;
  double std_mm = 0.0;
  std::vector<double> per_fold_mm;
};

/// Leave-one-out: register on all-but-i, evaluate pair i, for every i.
LoocvResult loocv(const Dataset& ds, const EvalConfig& config);

}  // namespace arcline::eval

#endif  // ARCLINE_EVALUATION_HPP
