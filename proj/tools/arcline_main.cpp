// Command-line surface: calibration, registration, tracking, Monte-Carlo
// sweeps and evaluation over JSON datasets / configs, CSV reports.

#include "arcline/calibration.hpp"
#include "arcline/dataset_io.hpp"
#include "arcline/evaluation.hpp"
#include "arcline/registration.hpp"
#include "arcline/simulation.hpp"
#include "arcline/tracking.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <optional>
#include <string>

namespace {

using namespace arcline;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNotConverged = 2;

double deg_of(double rad) { return io::rad_to_deg_exact(rad); }

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::fputs(text.c_str(), stdout);
  } else {
    io::write_text_file(out_path, text);
  }
}

void print_transform(const char* label, const RigidTransform& t) {
  std::printf("%s (row-major 4x4):\n", label);
  const Mat3& r = t.rotation();
  const Vec3& p = t.translation();
  for (int row = 0; row < 3; ++row) {
    std::printf("  %+.9f %+.9f %+.9f %+12.6f\n", r(row, 0), r(row, 1), r(row, 2), p(row));
  }
  std::printf("  %+.9f %+.9f %+.9f %+12.6f\n", 0.0, 0.0, 0.0, 1.0);
}

struct SolverFlags {
  std::optional<double> theta_bound_deg;
  std::optional<double> lambda_init_mm;

  double bound_rad(double fallback) const {
    return theta_bound_deg ? io::deg_to_rad(*theta_bound_deg) : fallback;
  }
  double lambda(double fallback) const { return lambda_init_mm ? *lambda_init_mm : fallback; }
};

int cmd_calibrate(const std::string& dataset_path, const std::string& out_path) {
  const eval::Dataset ds = io::read_dataset(dataset_path);
  if (!ds.spot_camera) {
    std::fprintf(stderr, "error: dataset has no spot_camera_mm (required for calibration)\n");
    return kExitValidation;
  }
  const CalibrationInput input(ds.marker_poses, *ds.spot_camera);
  const LaserCalibration calib = calibrate(input);
  for (const auto& warning : calib.warnings) std::fprintf(stderr, "warning: %s\n", warning.c_str());
  std::printf("poses: %zu\n", ds.marker_poses.size());
  std::printf("line origin (marker, mm): %.6f %.6f %.6f\n", calib.line_marker.origin().x(),
              calib.line_marker.origin().y(), calib.line_marker.origin().z());
  std::printf("line direction (marker):  %.9f %.9f %.9f\n", calib.line_marker.direction().x(),
              calib.line_marker.direction().y(), calib.line_marker.direction().z());
  std::printf("residual_mm: %.6f\n", calib.residual_mm);
  if (!out_path.empty()) {
    eval::Dataset updated = ds;
    updated.calibration = calib;
    io::write_dataset(out_path, updated);
    std::fprintf(stderr, "wrote %s\n", out_path.c_str());
  }
  return kExitOk;
}

int cmd_register(const std::string& dataset_path, int n_fit, std::uint64_t seed,
                 const SolverFlags& flags, const std::string& out_path) {
  const eval::Dataset ds = io::read_dataset(dataset_path);
  const eval::EvalConfig defaults;
  const double bound = flags.bound_rad(defaults.theta_bound_rad);
  const double lambda0 = flags.lambda(defaults.lambda_init_mm);

  if (n_fit > 0) {
    eval::EvalConfig config;
    config.theta_bound_rad = bound;
    config.lambda_init_mm = lambda0;
    const eval::EvalReport report = eval::fit_holdout_eval(ds, n_fit, seed, config);
    std::printf("n_fit: %d\nn_holdout: %d\n", report.n_fit, report.n_holdout);
    std::printf("tre_mean_mm: %.6f\ntre_std_mm: %.6f\n", report.tre_mean_mm, report.tre_std_mm);
    std::printf("final_cost_mm: %.9f\nconverged: %d\n", report.final_cost_mm,
                report.all_converged ? 1 : 0);
    return report.all_converged ? kExitOk : kExitNotConverged;
  }

  const auto pairs = eval::dataset_pairs(ds);
  registration::RegistrationProblem prob(pairs, ds.geometry, bound, lambda0);
  const auto result = registration::solve(prob);
  for (const auto& warning : result.warnings) std::fprintf(stderr, "warning: %s\n", warning.c_str());
  print_transform("f_reg camera->transducer", result.f_reg);
  std::printf("final_cost_mm: %.9f\n", result.final_cost_mm);
  std::printf("outer_iterations: %d\nconverged: %d\n", result.outer_iterations,
              result.converged ? 1 : 0);
  if (ds.ground_truth) {
    double err = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Vec3 p = laser_point(pairs[i].laser_line, ds.ground_truth->lambdas_mm[i]);
      err += (result.f_reg.apply(p) - ds.ground_truth->f_reg.apply(p)).norm();
    }
    std::printf("pose_error_vs_truth_mm: %.6f\n", err / static_cast<double>(pairs.size()));
  }
  if (!out_path.empty()) {
    nlohmann::json j;
    j["schema"] = "arcline-registration/1";
    nlohmann::json f = nlohmann::json::array();
    const Mat3& r = result.f_reg.rotation();
    const Vec3& p = result.f_reg.translation();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) f.push_back(r(row, col));
      f.push_back(p(row));
    }
    for (double v : {0.0, 0.0, 0.0, 1.0}) f.push_back(v);
    j["f_reg"] = f;
    j["lambdas_mm"] = result.lambdas_mm;
    nlohmann::json thetas = nlohmann::json::array();
    for (double t : result.thetas_rad) thetas.push_back(deg_of(t));
    j["thetas_deg"] = thetas;
    j["final_cost_mm"] = result.final_cost_mm;
    j["outer_iterations"] = result.outer_iterations;
    j["converged"] = result.converged;
    io::write_text_file(out_path, j.dump(2) + "\n");
    std::fprintf(stderr, "wrote %s\n", out_path.c_str());
  }
  return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_track(const std::string& dataset_path, int pair_index, const SolverFlags& flags) {
  const eval::Dataset ds = io::read_dataset(dataset_path);
  const auto pairs = eval::dataset_pairs(ds);
  if (pair_index < 0 || static_cast<std::size_t>(pair_index) >= pairs.size()) {
    std::fprintf(stderr, "error: --pair index out of range (dataset has %zu pairs)\n", pairs.size());
    return kExitValidation;
  }
  const eval::EvalConfig defaults;
  const double bound = flags.bound_rad(defaults.theta_bound_rad);
  const double lambda0 = flags.lambda(defaults.lambda_init_mm);

  std::vector<registration::RegistrationPair> fit;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (static_cast<int>(i) != pair_index) fit.push_back(pairs[i]);
  }
  registration::RegistrationProblem prob(std::move(fit), ds.geometry, bound, lambda0);
  const auto reg = registration::solve(prob);
  if (!reg.converged) {
    std::fprintf(stderr, "error: registration on the remaining pairs did not converge\n");
    return kExitNotConverged;
  }
  const auto& target = pairs[static_cast<std::size_t>(pair_index)];
  const auto result =
      tracking::track({reg.f_reg, target.laser_line, target.obs, ds.geometry, bound});
  std::printf("pair: %d\n", pair_index);
  std::printf("delta_theta_deg: %.6f\n", deg_of(result.delta_theta_rad));
  std::printf("lambda_mm: %.6f\n", result.lambda_mm);
  std::printf("residual_mm: %.6f\n", result.residual_mm);
  if (ds.ground_truth) {
    const double true_delta = ds.ground_truth->delta_thetas_rad[static_cast<std::size_t>(pair_index)];
    std::printf("delta_theta_error_deg: %.6f\n",
                deg_of(std::abs(result.delta_theta_rad - true_delta)));
    std::printf("plane_deviation_at_30mm_mm: %.6f\n",
                tracking::plane_deviation_mm(std::abs(result.delta_theta_rad - true_delta), 30.0));
  }
  return kExitOk;
}

int cmd_simulate_dataset(const std::string& config_path, std::optional<std::uint64_t> seed,
                         int n_pairs, double theta_quant_deg, const std::string& out_path) {
  sim::SimConfig config = config_path.empty() ? sim::SimConfig::benchtop_experiment()
                                              : io::read_sim_config(config_path);
  if (seed) config.master_seed = *seed;
  if (theta_quant_deg > 0.0) config.theta_quant_rad = io::deg_to_rad(theta_quant_deg);
  Rng rng = Rng::stream(config.master_seed, 0xD5, 0);
  const eval::Dataset ds = sim::simulate_dataset(config, rng, n_pairs);
  if (out_path.empty()) {
    std::fputs((io::dataset_to_json(ds).dump(2) + "\n").c_str(), stdout);
  } else {
    io::write_dataset(out_path, ds);
    std::fprintf(stderr, "wrote %s (%zu pairs)\n", out_path.c_str(), ds.size());
  }
  return kExitOk;
}

int cmd_simulate_sweep(bool calibration_sweep, const std::string& config_path,
                       std::optional<std::uint64_t> seed, std::optional<int> trials,
                       const std::string& out_path, const std::string& json_out) {
  sim::SimConfig config =
      config_path.empty() ? sim::SimConfig{} : io::read_sim_config(config_path);
  if (seed) config.master_seed = *seed;
  if (trials) config.trials = *trials;

  if (calibration_sweep) {
    const auto result = sim::run_calibration_sweep(config);
    emit(io::calib_sweep_csv(result), out_path);
    if (!json_out.empty()) io::write_text_file(json_out, io::calib_sweep_to_json(result).dump(2) + "\n");
    std::fprintf(stderr, "n_poses  mean_error_mm  std_mm  mean_fit_residual_mm\n");
    for (const auto& row : result.summary) {
      std::fprintf(stderr, "%7d  %13.4f  %6.4f  %20.4f\n", row.n_poses, row.mean_error_mm,
                   row.std_error_mm, row.mean_fit_residual_mm);
    }
  } else {
    const auto result = sim::run_registration_sweep(config);
    emit(io::reg_sweep_csv(result), out_path);
    if (!json_out.empty()) io::write_text_file(json_out, io::reg_sweep_to_json(result).dump(2) + "\n");
    std::fprintf(stderr, "deviation_deg  mean_tre_mm  std_mm  mean_outer_iters\n");
    for (const auto& row : result.summary) {
      std::fprintf(stderr, "%13.1f  %11.4f  %6.4f  %16.2f\n", deg_of(row.deviation_rad),
                   row.mean_tre_mm, row.std_tre_mm, row.mean_outer_iterations);
    }
  }
  return kExitOk;
}

int cmd_evaluate_tre(const std::string& dataset_path, int n_fit, std::uint64_t seed, int repeats,
                     const SolverFlags& flags) {
  const eval::Dataset ds = io::read_dataset(dataset_path);
  eval::EvalConfig config;
  config.theta_bound_rad = flags.bound_rad(config.theta_bound_rad);
  config.lambda_init_mm = flags.lambda(config.lambda_init_mm);
  config.split_repeats = repeats;
  const eval::EvalReport report = eval::fit_holdout_eval(ds, n_fit, seed, config);
  std::printf("n_fit: %d\nn_holdout: %d\nsplits: %d\n", report.n_fit, report.n_holdout, repeats);
  std::printf("tre_mean_mm: %.6f\ntre_std_mm: %.6f\n", report.tre_mean_mm, report.tre_std_mm);
  std::printf("mean_outer_iterations: %.2f\nconverged: %d\n", report.mean_outer_iterations,
              report.all_converged ? 1 : 0);
  return report.all_converged ? kExitOk : kExitNotConverged;
}

int cmd_evaluate_loocv(const std::string& dataset_path, const SolverFlags& flags) {
  const eval::Dataset ds = io::read_dataset(dataset_path);
  eval::EvalConfig config;
  config.theta_bound_rad = flags.bound_rad(config.theta_bound_rad);
  config.lambda_init_mm = flags.lambda(config.lambda_init_mm);
  const eval::LoocvResult result = eval::loocv(ds, config);
  std::printf("folds: %zu\n", result.per_fold_mm.size());
  std::printf("loocv_mean_mm: %.6f\nloocv_std_mm: %.6f\n", result.mean_mm, result.std_mm);
  for (std::size_t i = 0; i < result.per_fold_mm.size(); ++i) {
    std::printf("fold %2zu: %.6f\n", i, result.per_fold_mm[i]);
  }
  return kExitOk;
}

int cmd_report(const std::string& json_path, const std::string& out_path) {
  const nlohmann::json j = nlohmann::json::parse(io::read_text_file(json_path));
  emit(io::sweep_json_to_csv(j), out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"arc-to-line frame registration toolkit"};
  app.require_subcommand(1);

  SolverFlags flags;
  int threads = 0;
  app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");
  app.add_option("--theta-bound-deg", flags.theta_bound_deg, "slice-thickness half-angle");
  app.add_option("--lambda-init-mm", flags.lambda_init_mm, "nominal laser standoff");

  std::string dataset_path, out_path, json_out, config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int n_fit = 0, pair_index = -1, n_pairs = -1, repeats = 1, trials_opt = 0;
  double theta_quant_deg = 0.0;

  auto* calibrate_cmd = app.add_subcommand("calibrate", "fit the beam line from tracked poses");
  calibrate_cmd->add_option("dataset", dataset_path, "dataset JSON")->required();
  calibrate_cmd->add_option("--out", out_path, "write dataset with calibration block");

  auto* register_cmd = app.add_subcommand("register", "solve the arc-to-line registration");
  register_cmd->add_option("dataset", dataset_path, "dataset JSON")->required();
  register_cmd->add_option("--n-fit", n_fit, "register on a seeded subset, TRE on the rest");
  register_cmd->add_option("--seed", seed, "subset selection seed")->each([&](const std::string&) {
    seed_given = true;
  });
  register_cmd->add_option("--out", out_path, "write the solved registration JSON");

  auto* track_cmd = app.add_subcommand("track", "in-plane rotation for one held-out pair");
  track_cmd->add_option("dataset", dataset_path, "dataset JSON")->required();
  track_cmd->add_option("--pair", pair_index, "pair index to track")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte-Carlo studies");
  simulate_cmd->require_subcommand(1);
  auto* sim_dataset = simulate_cmd->add_subcommand("dataset", "one synthetic acquisition campaign");
  sim_dataset->add_option("config", config_path, "sim config JSON (defaults when omitted)");
  sim_dataset->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    seed_given = true;
  });
  sim_dataset->add_option("--n-pairs", n_pairs, "number of acquisitions");
  sim_dataset->add_option("--theta-quant-deg", theta_quant_deg,
                          "snap scan angles to this search increment (0 = off)");
  sim_dataset->add_option("--out", out_path, "dataset output path (stdout when omitted)");
  auto* sim_calib = simulate_cmd->add_subcommand("calib-sweep", "calibration vs pose count");
  auto* sim_reg = simulate_cmd->add_subcommand("reg-sweep", "registration vs deviation");
  for (auto* cmd : {sim_calib, sim_reg}) {
    cmd->add_option("config", config_path, "sim config JSON (built-in defaults when omitted)");
    cmd->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--trials", trials_opt, "trials per sweep point");
    cmd->add_option("--out", out_path, "CSV output path (stdout when omitted)");
    cmd->add_option("--json-out", json_out, "also store the full result as JSON");
  }

  auto* evaluate_cmd = app.add_subcommand("evaluate", "accuracy protocols");
  evaluate_cmd->require_subcommand(1);
  auto* eval_tre = evaluate_cmd->add_subcommand("tre", "seeded fit/holdout TRE");
  eval_tre->add_option("dataset", dataset_path, "dataset JSON")->required();
  eval_tre->add_option("--n-fit", n_fit, "fit subset size")->required();
  eval_tre->add_option("--seed", seed, "split seed")->each([&](const std::string&) {
    seed_given = true;
  });
  eval_tre->add_option("--repeats", repeats, "number of repeated splits");
  auto* eval_loocv = evaluate_cmd->add_subcommand("loocv", "leave-one-out cross validation");
  eval_loocv->add_option("dataset", dataset_path, "dataset JSON")->required();

  auto* report_cmd = app.add_subcommand("report", "re-emit plot-ready CSV from a sweep JSON");
  report_cmd->add_option("result", json_out, "sweep result JSON")->required();
  report_cmd->add_option("--out", out_path, "CSV output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the usage message
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (threads > 0) omp_set_num_threads(threads);

  try {
    if (calibrate_cmd->parsed()) return cmd_calibrate(dataset_path, out_path);
    if (register_cmd->parsed()) return cmd_register(dataset_path, n_fit, seed, flags, out_path);
    if (track_cmd->parsed()) return cmd_track(dataset_path, pair_index, flags);
    if (simulate_cmd->parsed()) {
      if (sim_dataset->parsed()) {
        return cmd_simulate_dataset(config_path,
                                    seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                    n_pairs, theta_quant_deg, out_path);
      }
      return cmd_simulate_sweep(sim_calib->parsed(), config_path,
                                seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                trials_opt > 0 ? std::optional<int>(trials_opt) : std::nullopt,
                                out_path, json_out);
    }
    if (evaluate_cmd->parsed()) {
      if (eval_tre->parsed()) return cmd_evaluate_tre(dataset_path, n_fit, seed, repeats, flags);
      return cmd_evaluate_loocv(dataset_path, flags);
    }
    if (report_cmd->parsed()) return cmd_report(json_out, out_path);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitOk;
}
