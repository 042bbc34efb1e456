#include "arcline/registration.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>

namespace arcline::registration {

namespace {

constexpr double kResidualKink = 1e-12;  // below this a summand has zero subgradient
constexpr double kGradTol = 1e-13;
// Scenes live at the 10..100 mm scale, so a total cost this small is float
// noise; the descent treats it as an exact fit.
constexpr double kCostFloor = 1e-11;

double wrap_to_near(double angle, double reference) {
  return angle + 2.0 * M_PI * std::round((reference - angle) / (2.0 * M_PI));
}

}  // namespace

RegistrationProblem::RegistrationProblem(std::vector<RegistrationPair> pairs,
                                         const TrusGeometry& geometry, double theta_bound_rad,
                                         double lambda_init_mm)
    : pairs_(std::move(pairs)),
      geometry_(geometry),
      theta_bound_rad_(theta_bound_rad),
      lambda_init_mm_(lambda_init_mm) {
  if (pairs_.size() < 3) {
    throw std::invalid_argument("RegistrationProblem: at least 3 pairs required");
  }
  if (!(theta_bound_rad_ > 0.0) || !(lambda_init_mm_ > 0.0)) {
    throw std::invalid_argument("RegistrationProblem: theta bound and lambda init must be positive");
  }
  elements_.reserve(pairs_.size());
  for (const auto& pair : pairs_) {
    elements_.push_back(element_position(geometry_, pair.obs.scan_angle_rad, pair.obs.lateral_mm));
  }
}

Vec3 RegistrationProblem::arc_point(std::size_t i, double theta_prime_rad) const {
  return elements_[i] +
         pairs_[i].obs.radius_mm * Vec3(0.0, std::sin(theta_prime_rad), std::cos(theta_prime_rad));
}

double cost(const RigidTransform& f_reg, const std::vector<double>& lambdas_mm,
            const std::vector<double>& thetas_rad, const RegistrationProblem& prob) {
  if (lambdas_mm.size() != prob.size() || thetas_rad.size() != prob.size()) {
    throw std::invalid_argument("cost: lambda/theta length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const Vec3 p = laser_point(prob.pairs()[i].laser_line, lambdas_mm[i]);
    total += (f_reg.apply(p) - prob.arc_point(i, thetas_rad[i])).norm();
  }
  return total;
}

CostGradient cost_gradient(const RigidTransform& f_reg, const std::vector<double>& lambdas_mm,
                           const std::vector<double>& thetas_rad, const RegistrationProblem& prob,
                           const Vec3& anchor) {
  CostGradient g;
  g.rotation = Vec3::Zero();
  g.translation = Vec3::Zero();
  g.lambdas.assign(prob.size(), 0.0);
  g.thetas.assign(prob.size(), 0.0);

  for (std::size_t i = 0; i < prob.size(); ++i) {
    const auto& pair = prob.pairs()[i];
    const Vec3 p = laser_point(pair.laser_line, lambdas_mm[i]);
    const Vec3 y = f_reg.apply(p);
    const Vec3 r = y - prob.arc_point(i, thetas_rad[i]);
    const double d = r.norm();
    if (d < kResidualKink) continue;
    const Vec3 rhat = r / d;

    g.rotation += (y - anchor).cross(rhat);
    g.translation += rhat;
    g.lambdas[i] = rhat.dot(f_reg.rotate(pair.laser_line.direction()));
    const double t = thetas_rad[i];
    g.thetas[i] = -pair.obs.radius_mm * (rhat.y() * std::cos(t) - rhat.z() * std::sin(t));
  }
  return g;
}

RigidTransform retract_pose(const RigidTransform& f, const Vec3& omega, const Vec3& du,
                            const Vec3& anchor) {
  const RigidTransform rot = RigidTransform::from_axis_angle(omega, Vec3::Zero());
  const Mat3 r_new = rot.rotation() * f.rotation();
  const Vec3 t_new = rot.rotation() * (f.translation() - anchor) + anchor + du;
  return RigidTransform(r_new, t_new);
}

double optimal_theta_prime(const Vec3& c, double radius_mm, double theta_scan_rad,
                           double bound_rad) {
  const double lo = theta_scan_rad - bound_rad;
  const double hi = theta_scan_rad + bound_rad;
  // Residual^2 = |c|^2 + r^2 - 2 r (c_y sin t + c_z cos t): minimize by
  // maximizing the projection g(t) = c_y sin t + c_z cos t.
  const double amp = std::hypot(c.y(), c.z());
  if (radius_mm == 0.0 || amp == 0.0) {
    return lo;  // every angle ties; smaller wins
  }
  const double peak = wrap_to_near(std::atan2(c.y(), c.z()), theta_scan_rad);
  if (peak >= lo && peak <= hi) return peak;
  if (bound_rad >= M_PI) return peak;
  const double g_lo = c.y() * std::sin(lo) + c.z() * std::cos(lo);
  const double g_hi = c.y() * std::sin(hi) + c.z() * std::cos(hi);
  if (g_lo >= g_hi) return lo;  // ties toward the smaller angle
  return hi;
}

namespace {
SolverState initialize_at(const RegistrationProblem& prob, double lambda_init_mm);
}

SolverState initialize(const RegistrationProblem& prob) {
  return initialize_at(prob, prob.lambda_init_mm());
}

namespace {

// Closed-form least-squares rigid alignment (orthogonal Procrustes).
RigidTransform kabsch_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::RowVector3d a_mean = a.colwise().mean();
  const Eigen::RowVector3d b_mean = b.colwise().mean();
  const Mat3 h = (a.rowwise() - a_mean).transpose() * (b.rowwise() - b_mean);
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Mat3 rot = svd.matrixV() * d * svd.matrixU().transpose();
  const Vec3 trans = b_mean.transpose() - rot * a_mean.transpose();
  return RigidTransform(nearest_rotation(rot), trans);
}

SolverState initialize_at(const RegistrationProblem& prob, double lambda_init_mm) {
  const std::size_t n = prob.size();
  SolverState state;
  state.lambdas_mm.assign(n, lambda_init_mm);
  state.thetas_rad.resize(n);

  Eigen::MatrixXd a(n, 3), b(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    state.thetas_rad[i] = prob.pairs()[i].obs.scan_angle_rad;
    a.row(i) = laser_point(prob.pairs()[i].laser_line, lambda_init_mm).transpose();
    b.row(i) = prob.arc_point(i, state.thetas_rad[i]).transpose();
  }
  {
    const Eigen::RowVector3d a_mean = a.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> rank_probe(a.rowwise() - a_mean);
    const auto& sv = rank_probe.singularValues();
    if (sv(0) < 1e-9 || sv(1) < 1e-8 * sv(0)) {
      throw std::runtime_error("degenerate initialization; vary PM placement");
    }
  }
  state.f_reg = kabsch_align(a, b);
  return state;
}

// A few rounds of coordinate descent on the squared-residual surrogate:
// exact angles, lambda projections, Procrustes re-fit. All pieces are
// closed form; this walks the start point into the right basin before the
// Gauss-Newton polish.
void refine_start(SolverState& state, const RegistrationProblem& prob, int rounds) {
  const std::size_t n = prob.size();
  Eigen::MatrixXd a(n, 3), b(n, 3);
  for (int round = 0; round < rounds; ++round) {
    solve_step_angles(state, prob);
    const RigidTransform inv = state.f_reg.inverse();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pair = prob.pairs()[i];
      const Vec3 target = prob.arc_point(i, state.thetas_rad[i]);
      state.lambdas_mm[i] =
          std::max(0.0, pair.laser_line.direction().dot(inv.apply(target) - pair.laser_line.origin()));
      a.row(i) = laser_point(pair.laser_line, state.lambdas_mm[i]).transpose();
      b.row(i) = target.transpose();
    }
    state.f_reg = kabsch_align(a, b);
  }
}

}  // namespace

namespace {

// Damped Gauss-Newton descent on the reweighted cost
// sum_i d_i^2 / sqrt(d_i^2 + eps^2), whose gradient matches the true-cost
// subgradient away from the kinks. Plain steepest descent crawls along the
// strongly coupled rotation/translation/lambda/theta valley of this
// problem (measured: cost stuck 4+ orders of magnitude above the optimum
// with a monotone descent path available); the damped second-order model
// follows the valley. Trial steps are accepted only if the true unsquared
// cost decreases, so the descent stays monotone. theta' columns are
// included when with_theta is set, and both lambda >= 0 and the theta
// bound are enforced by projection.
//
// Rotation increments act about the centroid of the transformed laser
// points and are scaled by the rms lever arm so all blocks share
// millimeter units.
PoseStepStatus gauss_newton_descent(SolverState& state, const RegistrationProblem& prob,
                                    const SolveConfig& config, bool with_theta) {
  const std::size_t n = prob.size();
  const int dim = (with_theta ? 6 + 2 * static_cast<int>(n) : 6 + static_cast<int>(n));

  Vec3 anchor = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    anchor += state.f_reg.apply(laser_point(prob.pairs()[i].laser_line, state.lambdas_mm[i]));
  }
  anchor /= static_cast<double>(n);
  double lever = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 y = state.f_reg.apply(laser_point(prob.pairs()[i].laser_line, state.lambdas_mm[i]));
    lever += (y - anchor).squaredNorm();
  }
  lever = std::sqrt(lever / static_cast<double>(n));
  if (!(lever > 1.0)) lever = 1.0;

  double current = cost(state.f_reg, state.lambdas_mm, state.thetas_rad, prob);
  double damping = 1e-4;
  PoseStepStatus status = PoseStepStatus::kOk;
  bool settled = false;

  Eigen::MatrixXd h(dim, dim), damped(dim, dim);
  Eigen::VectorXd g(dim), delta(dim);
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, dim);
  std::vector<double> lam_trial(n), theta_trial(n);

  for (int iter = 0; iter < config.max_inner && !settled; ++iter) {
    if (current < kCostFloor) {
      if (iter == 0) status = PoseStepStatus::kStationary;
      break;
    }
    const double eps = std::max(1e-6 * current / static_cast<double>(n), 1e-12);

    h.setZero();
    g.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& pair = prob.pairs()[i];
      const Vec3 y = state.f_reg.apply(laser_point(pair.laser_line, state.lambdas_mm[i]));
      const Vec3 r = y - prob.arc_point(i, state.thetas_rad[i]);
      const double w = 1.0 / std::sqrt(r.squaredNorm() + eps * eps);

      jac.setZero();
      const Vec3 arm = (y - anchor) / lever;
      // d r / d omega_scaled = -[arm]_x
      jac.col(0) << 0.0, -arm.z(), arm.y();
      jac.col(1) << arm.z(), 0.0, -arm.x();
      jac.col(2) << -arm.y(), arm.x(), 0.0;
      jac.block<3, 3>(0, 3).setIdentity();
      jac.col(6 + static_cast<int>(i)) = state.f_reg.rotate(pair.laser_line.direction());
      if (with_theta) {
        const double t = state.thetas_rad[i];
        jac.col(6 + static_cast<int>(n + i)) =
            -pair.obs.radius_mm * Vec3(0.0, std::cos(t), -std::sin(t));
      }

      h.noalias() += w * jac.transpose() * jac;
      g.noalias() += w * jac.transpose() * r;
    }
    const double gnorm = g.norm();
    if (gnorm < kGradTol) {
      if (iter == 0) status = PoseStepStatus::kStationary;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt <= config.max_backtracks; ++attempt) {
      damped = h;
      damped.diagonal() += damping * h.diagonal().cwiseMax(1e-12);
      delta = damped.ldlt().solve(-g);

      if (with_theta) {
        // Active-set pass: theta components pushed past their bound are
        // fixed at the clamp and the remaining variables are re-solved, so
        // the pose part does not assume angle motion the clamp forbids.
        std::vector<int> clamped;
        for (std::size_t i = 0; i < n; ++i) {
          const int col = 6 + static_cast<int>(n + i);
          const double scan = prob.pairs()[i].obs.scan_angle_rad;
          const double target = std::clamp(state.thetas_rad[i] + delta(col),
                                           scan - prob.theta_bound_rad(),
                                           scan + prob.theta_bound_rad());
          if (target != state.thetas_rad[i] + delta(col)) {
            delta(col) = target - state.thetas_rad[i];
            clamped.push_back(col);
          }
        }
        if (!clamped.empty() && clamped.size() < n) {
          std::vector<int> kept;
          for (int c = 0; c < dim; ++c) {
            if (std::find(clamped.begin(), clamped.end(), c) == clamped.end()) kept.push_back(c);
          }
          Eigen::VectorXd rhs = -g;
          for (int c : clamped) rhs -= damped.col(c) * delta(c);
          Eigen::MatrixXd h_red(kept.size(), kept.size());
          Eigen::VectorXd g_red(kept.size());
          for (std::size_t a = 0; a < kept.size(); ++a) {
            g_red(static_cast<int>(a)) = rhs(kept[a]);
            for (std::size_t b = 0; b < kept.size(); ++b) {
              h_red(static_cast<int>(a), static_cast<int>(b)) = damped(kept[a], kept[b]);
            }
          }
          const Eigen::VectorXd delta_red = h_red.ldlt().solve(g_red);
          for (std::size_t a = 0; a < kept.size(); ++a) delta(kept[a]) = delta_red(static_cast<int>(a));
        }
      }

      const Vec3 omega = delta.segment<3>(0) / lever;
      const Vec3 du = delta.segment<3>(3);
      RigidTransform f_trial = retract_pose(state.f_reg, omega, du, anchor);
      theta_trial = state.thetas_rad;
      for (std::size_t i = 0; i < n; ++i) {
        lam_trial[i] = std::max(0.0, state.lambdas_mm[i] + delta(6 + static_cast<int>(i)));
        if (with_theta) {
          const double scan = prob.pairs()[i].obs.scan_angle_rad;
          theta_trial[i] = std::clamp(state.thetas_rad[i] + delta(6 + static_cast<int>(n + i)),
                                      scan - prob.theta_bound_rad(), scan + prob.theta_bound_rad());
        }
      }
      const double trial = cost(f_trial, lam_trial, theta_trial, prob);
      const double predicted = -delta.dot(g);  // model decrease, first order
      if (trial <= current - config.armijo_c * std::max(predicted, 0.0) && trial < current) {
        state.f_reg = f_trial;
        state.lambdas_mm = lam_trial;
        state.thetas_rad = theta_trial;
        damping = std::max(damping * 0.25, 1e-12);
        const double rel = (current - trial) / std::max(current, 1e-12);
        current = trial;
        accepted = true;
        settled = rel < config.inner_tol_rel;
        break;
      }
      damping *= 4.0;
    }
    if (!accepted) {
      status = PoseStepStatus::kStalled;
      break;
    }
  }
  return status;
}

}  // namespace

PoseStepStatus solve_step_pose(SolverState& state, const RegistrationProblem& prob,
                               const SolveConfig& config) {
  return gauss_newton_descent(state, prob, config, false);
}

PoseStepStatus solve_step_joint(SolverState& state, const RegistrationProblem& prob,
                                const SolveConfig& config) {
  return gauss_newton_descent(state, prob, config, true);
}

PairSolution solve_pair_variables(const RigidTransform& f_reg, const Line3& laser_line,
                                  const PmObservation& obs, const TrusGeometry& geometry,
                                  double theta_bound_rad) {
  const Vec3 element = element_position(geometry, obs.scan_angle_rad, obs.lateral_mm);
  const Vec3 base = f_reg.apply(laser_line.origin());
  const Vec3 dir = f_reg.rotate(laser_line.direction());

  auto arc_point = [&](double theta) -> Vec3 {
    return element + obs.radius_mm * Vec3(0.0, std::sin(theta), std::cos(theta));
  };
  auto lambda_for = [&](double theta) { return std::max(0.0, dir.dot(arc_point(theta) - base)); };
  auto residual_at = [&](double theta, double lambda) {
    return (base + lambda * dir - arc_point(theta)).norm();
  };

  // Residual with lambda eliminated (exact projection per angle).
  auto eliminated = [&](double t) { return residual_at(t, lambda_for(t)); };

  // Golden-section refinement within a bracket; the eliminated profile is
  // smooth between adjacent grid samples.
  auto polish = [&](double lo, double hi) {
    constexpr double kGolden = 0.6180339887498949;
    double a = lo, b = hi;
    double m1 = b - kGolden * (b - a), m2 = a + kGolden * (b - a);
    double f1 = eliminated(m1), f2 = eliminated(m2);
    int iter = 0;
    while (b - a > 1e-13 && iter < 120) {
      if (f1 <= f2) {
        b = m2;
        m2 = m1;
        f2 = f1;
        m1 = b - kGolden * (b - a);
        f1 = eliminated(m1);
      } else {
        a = m1;
        m1 = m2;
        f1 = f2;
        m2 = a + kGolden * (b - a);
        f2 = eliminated(m2);
      }
      ++iter;
    }
    const double t = f1 <= f2 ? m1 : m2;
    PairSolution sol{lambda_for(t), t, 0.0, iter, true};
    sol.residual_mm = residual_at(sol.theta_prime_rad, sol.lambda_mm);
    return sol;
  };

  // The eliminated profile has up to a few local minima inside the bound;
  // refine every grid-local minimum (and the clamped endpoints) and keep
  // the best.
  constexpr int kGrid = 65;
  const double lo_bound = obs.scan_angle_rad - theta_bound_rad;
  const double step = 2.0 * theta_bound_rad / (kGrid - 1);
  std::array<double, kGrid> grid_r;
  for (int k = 0; k < kGrid; ++k) {
    grid_r[static_cast<std::size_t>(k)] = eliminated(lo_bound + step * k);
  }
  PairSolution best;
  bool have_best = false;
  for (int k = 0; k < kGrid; ++k) {
    const bool local_min = (k == 0 || grid_r[k] <= grid_r[k - 1]) &&
                           (k == kGrid - 1 || grid_r[k] <= grid_r[k + 1]);
    if (!local_min) continue;
    const double lo = std::max(lo_bound, lo_bound + step * (k - 1));
    const double hi = std::min(obs.scan_angle_rad + theta_bound_rad, lo_bound + step * (k + 1));
    PairSolution sol = polish(lo, hi);
    // Keep the exact endpoint when the minimum sits on the clamp.
    const double end = k == 0 ? lo_bound : obs.scan_angle_rad + theta_bound_rad;
    if ((k == 0 || k == kGrid - 1) && eliminated(end) <= sol.residual_mm) {
      sol = PairSolution{lambda_for(end), end, eliminated(end), sol.iterations, true};
    }
    if (!have_best || sol.residual_mm < best.residual_mm) {
      best = sol;
      have_best = true;
    }
  }
  return best;
}

void solve_step_angles(SolverState& state, const RegistrationProblem& prob) {
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const auto& pair = prob.pairs()[i];
    const Vec3 y = state.f_reg.apply(laser_point(pair.laser_line, state.lambdas_mm[i]));
    const Vec3 c = y - prob.element(i);
    const double candidate =
        optimal_theta_prime(c, pair.obs.radius_mm, pair.obs.scan_angle_rad, prob.theta_bound_rad());
    // Guard against float wobble: only move when not worse.
    const double d_new = (y - prob.arc_point(i, candidate)).norm();
    const double d_old = (y - prob.arc_point(i, state.thetas_rad[i])).norm();
    if (d_new <= d_old) state.thetas_rad[i] = candidate;
  }
}

namespace {

RegistrationResult solve_from(const RegistrationProblem& prob, const SolveConfig& config,
                              double lambda_seed_mm) {
  RegistrationResult result;
  SolverState state = initialize_at(prob, lambda_seed_mm);
  refine_start(state, prob, config.init_refine_rounds);
  double previous = cost(state.f_reg, state.lambdas_mm, state.thetas_rad, prob);
  result.cost_trace.push_back(previous);

  for (int outer = 1; outer <= config.max_outer; ++outer) {
    const PoseStepStatus status = solve_step_joint(state, prob, config);
    solve_step_angles(state, prob);
    // Per-pair global re-solve of (lambda, theta'): jumps off the wrong
    // branch when a line crosses its arc circle twice. Accepted only when
    // it improves the pair's summand.
    for (std::size_t i = 0; i < prob.size(); ++i) {
      const auto& pair = prob.pairs()[i];
      const PairSolution sol = solve_pair_variables(state.f_reg, pair.laser_line, pair.obs,
                                                    prob.geometry(), prob.theta_bound_rad());
      const Vec3 y = state.f_reg.apply(laser_point(pair.laser_line, state.lambdas_mm[i]));
      if (sol.residual_mm < (y - prob.arc_point(i, state.thetas_rad[i])).norm()) {
        state.lambdas_mm[i] = sol.lambda_mm;
        state.thetas_rad[i] = sol.theta_prime_rad;
      }
    }
    const double current = cost(state.f_reg, state.lambdas_mm, state.thetas_rad, prob);
    result.cost_trace.push_back(current);
    result.outer_iterations = outer;

#ifndef NDEBUG
    for (std::size_t i = 0; i < prob.size(); ++i) {
      assert(state.lambdas_mm[i] >= 0.0);
      assert(std::abs(state.thetas_rad[i] - prob.pairs()[i].obs.scan_angle_rad) <=
             prob.theta_bound_rad() + 1e-12);
    }
#endif

    if (current < config.cost_floor_mm) {
      result.converged = true;
      break;
    }
    const double rel = std::abs(previous - current) / std::max(previous, 1e-12);
    previous = current;
    if (rel < config.tol_rel) {
      result.converged = status != PoseStepStatus::kStalled;
      break;
    }
  }

  result.f_reg = state.f_reg;
  result.lambdas_mm = std::move(state.lambdas_mm);
  result.thetas_rad = std::move(state.thetas_rad);
  result.final_cost_mm = result.cost_trace.back();
  return result;
}

}  // namespace

RegistrationResult solve(const RegistrationProblem& prob, const SolveConfig& config) {
  std::vector<double> seeds;
  for (double scale : config.lambda_seed_scales) {
    if (scale > 0.0) seeds.push_back(scale * prob.lambda_init_mm());
  }
  if (seeds.empty()) seeds.push_back(prob.lambda_init_mm());

  RegistrationResult best;
  bool have_best = false;
  for (double seed : seeds) {
    RegistrationResult candidate = solve_from(prob, config, seed);
    if (!have_best || candidate.final_cost_mm < best.final_cost_mm) {
      best = std::move(candidate);
      have_best = true;
    }
    if (best.converged && best.final_cost_mm < config.cost_floor_mm) break;
  }
  if (prob.size() == 3) {
    best.warnings.push_back("3 pairs is the identifiability minimum; add pairs for redundancy");
  }
  return best;
}

}  // namespace arcline::registration
