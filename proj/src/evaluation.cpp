#include "arcline/evaluation.hpp"

#include "arcline/rng.hpp"
#include "arcline/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arcline::eval {

namespace {

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void Dataset::validate() const {
  if (marker_poses.size() != observations.size()) {
    throw std::invalid_argument("Dataset: marker_poses and observations must have equal length");
  }
  if (ground_truth) {
    if (ground_truth->lambdas_mm.size() != size() || ground_truth->delta_thetas_rad.size() != size()) {
      throw std::invalid_argument("Dataset: ground truth length mismatch");
    }
  }
}

std::vector<registration::RegistrationPair> dataset_pairs(const Dataset& ds) {
  ds.validate();
  if (!ds.calibration) {
    throw std::invalid_argument("Dataset: laser calibration required to derive camera-frame lines");
  }
  std::vector<registration::RegistrationPair> pairs;
  pairs.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    pairs.push_back({laser_line_in_camera(*ds.calibration, ds.marker_poses[i].inverse()),
                     ds.observations[i]});
  }
  return pairs;
}

TreStats tre(const RigidTransform& f_reg, const std::vector<registration::RegistrationPair>& holdout,
             const std::vector<double>& lambdas_mm, const std::vector<double>& thetas_rad,
             const TrusGeometry& geometry) {
  if (holdout.empty()) throw std::invalid_argument("tre: holdout set is empty");
  if (lambdas_mm.size() != holdout.size() || thetas_rad.size() != holdout.size()) {
    throw std::invalid_argument("tre: lambda/theta length mismatch");
  }
  TreStats stats;
  stats.per_point_mm.reserve(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    const Vec3 y = f_reg.apply(laser_point(holdout[i].laser_line, lambdas_mm[i]));
    const Vec3 q = pm_position(geometry, holdout[i].obs,
                               thetas_rad[i] - holdout[i].obs.scan_angle_rad);
    stats.per_point_mm.push_back((y - q).norm());
  }
  stats.mean_mm = mean_of(stats.per_point_mm);
  stats.std_mm = sample_std(stats.per_point_mm, stats.mean_mm);
  return stats;
}

TreStats tre_solved(const RigidTransform& f_reg,
                    const std::vector<registration::RegistrationPair>& holdout,
                    const TrusGeometry& geometry, double theta_bound_rad) {
  if (holdout.empty()) throw std::invalid_argument("tre: holdout set is empty");
  std::vector<double> lambdas(holdout.size()), thetas(holdout.size());
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    const auto result = tracking::track(
        {f_reg, holdout[i].laser_line, holdout[i].obs, geometry, theta_bound_rad});
    lambdas[i] = result.lambda_mm;
    thetas[i] = holdout[i].obs.scan_angle_rad + result.delta_theta_rad;
  }
  return tre(f_reg, holdout, lambdas, thetas, geometry);
}

namespace {

// Seeded partial Fisher-Yates draw of n_fit indices out of n.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            std::size_t n_fit,
                                                                            Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < n_fit; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  std::vector<std::size_t> fit(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_fit));
  std::vector<std::size_t> holdout(idx.begin() + static_cast<std::ptrdiff_t>(n_fit), idx.end());
  std::sort(fit.begin(), fit.end());
  std::sort(holdout.begin(), holdout.end());
  return {fit, holdout};
}

struct SplitOutcome {
  TreStats stats;
  registration::RegistrationResult reg;
};

SplitOutcome eval_one_split(const std::vector<registration::RegistrationPair>& pairs,
                            const std::vector<std::size_t>& fit,
                            const std::vector<std::size_t>& holdout, const TrusGeometry& geometry,
                            const EvalConfig& config) {
  std::vector<registration::RegistrationPair> fit_pairs, holdout_pairs;
  for (auto i : fit) fit_pairs.push_back(pairs[i]);
  for (auto i : holdout) holdout_pairs.push_back(pairs[i]);
  registration::RegistrationProblem prob(std::move(fit_pairs), geometry, config.theta_bound_rad,
                                         config.lambda_init_mm);
  auto reg = registration::solve(prob, config.solver);
  auto stats = tre_solved(reg.f_reg, holdout_pairs, geometry, config.theta_bound_rad);
  return {std::move(stats), std::move(reg)};
}

}  // namespace

EvalReport fit_holdout_eval(const Dataset& ds, int n_fit, std::uint64_t selection_seed,
                            const EvalConfig& config) {
  ds.validate();
  const std::size_t n = ds.size();
  if (n_fit < 3 || static_cast<std::size_t>(n_fit) + 1 > n) {
    throw std::invalid_argument("fit_holdout_eval: need 3 <= n_fit <= dataset size - 1");
  }
  const auto pairs = dataset_pairs(ds);

  EvalReport report;
  report.n_fit = n_fit;
  report.n_holdout = static_cast<int>(n) - n_fit;

  std::vector<double> split_means;
  double iters = 0.0;
  for (int rep = 0; rep < std::max(1, config.split_repeats); ++rep) {
    Rng rng = Rng::stream(selection_seed, 0xE5A1u, static_cast<std::uint64_t>(rep));
    auto [fit, holdout] = split_indices(n, static_cast<std::size_t>(n_fit), rng);
    auto outcome = eval_one_split(pairs, fit, holdout, ds.geometry, config);
    split_means.push_back(outcome.stats.mean_mm);
    report.per_point_errors_mm.insert(report.per_point_errors_mm.end(),
                                      outcome.stats.per_point_mm.begin(),
                                      outcome.stats.per_point_mm.end());
    report.final_cost_mm = outcome.reg.final_cost_mm;
    report.all_converged = report.all_converged && outcome.reg.converged;
    iters += outcome.reg.outer_iterations;
  }
  report.mean_outer_iterations = iters / static_cast<double>(split_means.size());
  report.tre_mean_mm = mean_of(split_means);
  report.tre_std_mm = split_means.size() > 1
                          ? sample_std(split_means, report.tre_mean_mm)
                          : sample_std(report.per_point_errors_mm, report.tre_mean_mm);
  return report;
}

LoocvResult loocv(const Dataset& ds, const EvalConfig& config) {
  ds.validate();
  const std::size_t n = ds.size();
  if (n < 4) throw std::invalid_argument("loocv: dataset size must be at least 4");
  const auto pairs = dataset_pairs(ds);

  LoocvResult result;
  result.per_fold_mm.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> fit;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) fit.push_back(j);
    }
    auto outcome = eval_one_split(pairs, fit, {i}, ds.geometry, config);
    result.per_fold_mm.push_back(outcome.stats.mean_mm);
  }
  result.mean_mm = mean_of(result.per_fold_mm);
  result.std_mm = sample_std(result.per_fold_mm, result.mean_mm);
  return result;
}

}  // namespace arcline::eval
