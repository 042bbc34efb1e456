// Arc-to-line registration: jointly estimate the camera->transducer pose
// F_reg, the per-pair laser depths lambda, and the per-pair source angles
// theta', by alternating gradient descent on (pose, lambda) with an exact
// per-pair angle update.

#ifndef ARCLINE_REGISTRATION_HPP
#define ARCLINE_REGISTRATION_HPP

#include "arcline/geometry.hpp"

#include <string>
#include <vector>

namespace arcline::registration {

struct RegistrationPair {
  Line3 laser_line;   // camera frame
  PmObservation obs;  // transducer frame
};

class RegistrationProblem {
 public:
  RegistrationProblem(std::vector<RegistrationPair> pairs, const TrusGeometry& geometry,
                      double theta_bound_rad, double lambda_init_mm);

  const std::vector<RegistrationPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  const TrusGeometry& geometry() const { return geometry_; }
  double theta_bound_rad() const { return theta_bound_rad_; }
  double lambda_init_mm() const { return lambda_init_mm_; }

  /// Receiving-element position of pair i (scan angle is fixed per pair).
  const Vec3& element(std::size_t i) const { return elements_[i]; }
  /// Arc point of pair i at absolute angle theta_prime.
  Vec3 arc_point(std::size_t i, double theta_prime_rad) const;

 private:
  std::vector<RegistrationPair> pairs_;
  TrusGeometry geometry_;
  double theta_bound_rad_;
  double lambda_init_mm_;
  std::vector<Vec3> elements_;
};

struct SolveConfig {
  double tol_rel = 1e-8;     // outer relative-cost convergence
  int max_outer = 200;
  double cost_floor_mm = 1e-9;   // absolute convergence for exactly consistent data
  double inner_tol_rel = 1e-10;  // pose/lambda descent, per accepted step
  int max_inner = 500;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 50;
  // The landscape has spurious near-fits; the solver restarts from this
  // fixed ladder of lambda seeds (relative to lambda_init) and keeps the
  // lowest-cost result. Deterministic by construction.
  std::vector<double> lambda_seed_scales = {1.0, 0.6, 1.4, 2.0, 0.3};
  // Closed-form squared-objective rounds walking each start into a basin
  // before the descent proper.
  int init_refine_rounds = 25;
};

struct SolverState {
  RigidTransform f_reg;
  std::vector<double> lambdas_mm;
  std::vector<double> thetas_rad;  // absolute theta' per pair
};

enum class PoseStepStatus { kOk, kStationary, kStalled };

/// Sum over pairs of the Euclidean distance between the transformed laser
/// point and the arc point (unsquared norms).
double cost(const RigidTransform& f_reg, const std::vector<double>& lambdas_mm,
            const std::vector<double>& thetas_rad, const RegistrationProblem& prob);

struct CostGradient {
  Vec3 rotation;     // w.r.t. axis-angle increment, rotating about `anchor`
  Vec3 translation;
  std::vector<double> lambdas;
  std::vector<double> thetas;
};

/// Analytic gradient of cost(). Pairs with residual below 1e-12 mm
/// contribute zero (subgradient convention at the kink of ||.||).
CostGradient cost_gradient(const RigidTransform& f_reg, const std::vector<double>& lambdas_mm,
                           const std::vector<double>& thetas_rad, const RegistrationProblem& prob,
                           const Vec3& anchor);

/// The pose increment the gradient refers to: rotate by omega about
/// `anchor`, then translate by du.
RigidTransform retract_pose(const RigidTransform& f, const Vec3& omega, const Vec3& du,
                            const Vec3& anchor);

/// Closed-form minimizer of || c - r * [0, sin t, cos t] || over
/// t in [theta_scan - bound, theta_scan + bound]; argmin ties resolve
/// toward the smaller angle.
double optimal_theta_prime(const Vec3& c, double radius_mm, double theta_scan_rad, double bound_rad);

struct PairSolution {
  double lambda_mm = 0.0;
  double theta_prime_rad = 0.0;
  double residual_mm = 0.0;
  int iterations = 0;
  bool settled = true;  // false when the polish hit its iteration cap
};

/// Global minimizer of one pair's summand over (lambda >= 0, theta'
/// within the bound) for a fixed pose: a coarse angle grid with exact
/// lambda projections seeds the alternation of the two exact 1-D steps.
/// The subproblem is bimodal whenever the transformed line crosses the
/// arc circle twice, so a local alternation alone is not enough.
PairSolution solve_pair_variables(const RigidTransform& f_reg, const Line3& laser_line,
                                  const PmObservation& obs, const TrusGeometry& geometry,
                                  double theta_bound_rad);

/// lambda = lambda_init, theta' = scan angle, pose from closed-form
/// least-squares rigid alignment of the two point sets. Throws on
/// collinear or coincident camera-side points.
SolverState initialize(const RegistrationProblem& prob);

/// Damped Gauss-Newton descent on (pose, lambda) holding theta' fixed;
/// lambda is projected to >= 0. Never increases the cost.
PoseStepStatus solve_step_pose(SolverState& state, const RegistrationProblem& prob,
                               const SolveConfig& config);

/// Exact per-pair angle update holding (pose, lambda) fixed; clamped to
/// the slice-thickness bound. Never increases the cost.
void solve_step_angles(SolverState& state, const RegistrationProblem& prob);

/// One damped Gauss-Newton update of (pose, lambda, theta') together,
/// with lambda >= 0 and the theta bound enforced by projection. The
/// strictly alternating pose/angle scheme has attracting fixed points
/// well above the optimum (the two blocks are strongly coupled), so the
/// full solve interleaves this joint update with the exact angle step.
PoseStepStatus solve_step_joint(SolverState& state, const RegistrationProblem& prob,
                                const SolveConfig& config);

struct RegistrationResult {
  RigidTransform f_reg;
  std::vector<double> lambdas_mm;
  std::vector<double> thetas_rad;
  double final_cost_mm = 0.0;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<double> cost_trace;
  std::vector<std::string> warnings;
};

/// Full alternating solve. Non-convergence is reported through
/// `converged`, never thrown.
RegistrationResult solve(const RegistrationProblem& prob, const SolveConfig& config = {});

}  // namespace arcline::registration

#endif  // ARCLINE_REGISTRATION_HPP
