#include "arcline/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace arcline::io {

namespace {

constexpr double kDegToRad = M_PI / 180.0;

nlohmann::json transform_to_json(const RigidTransform& t) {
  nlohmann::json arr = nlohmann::json::array();
  const Mat3& r = t.rotation();
  const Vec3& p = t.translation();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) arr.push_back(r(row, col));
    arr.push_back(p(row));
  }
  for (double v : {0.0, 0.0, 0.0, 1.0}) arr.push_back(v);
  return arr;
}

RigidTransform transform_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 16) {
    throw std::invalid_argument("transform must be a 16-element row-major array");
  }
  Mat3 r;
  Vec3 p;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r(row, col) = j[4 * row + col].get<double>();
    p(row) = j[4 * row + 3].get<double>();
  }
  return RigidTransform(r, p);
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

double deg_to_rad(double deg) { return deg * kDegToRad; }

double rad_to_deg_exact(double rad) {
  // Prefer the degree double that reproduces `rad` bit-for-bit on re-read;
  // some radian values have no such preimage, in which case the rounded
  // quotient is used and the value settles after one write/read cycle.
  const double d0 = rad / kDegToRad;
  if (d0 * kDegToRad == rad) return d0;
  double up = d0, dn = d0;
  for (int i = 0; i < 3; ++i) {
    up = std::nextafter(up, HUGE_VAL);
    dn = std::nextafter(dn, -HUGE_VAL);
    if (up * kDegToRad == rad) return up;
    if (dn * kDegToRad == rad) return dn;
  }
  return d0;
}

nlohmann::json dataset_to_json(const eval::Dataset& ds) {
  ds.validate();
  nlohmann::json j;
  j["schema"] = kDatasetSchema;
  j["units"] = {{"length", "mm"}, {"angle", "deg"}};
  j["description"] = ds.description;
  j["seed"] = ds.seed;
  j["geometry"] = {{"n_elements", ds.geometry.n_elements},
                   {"pitch_mm", ds.geometry.pitch_mm},
                   {"radius_mm", ds.geometry.radius_mm}};
  j["marker_poses"] = nlohmann::json::array();
  for (const auto& pose : ds.marker_poses) j["marker_poses"].push_back(transform_to_json(pose));
  j["observations"] = nlohmann::json::array();
  for (const auto& obs : ds.observations) {
    j["observations"].push_back({{"scan_angle_deg", rad_to_deg_exact(obs.scan_angle_rad)},
                                 {"lateral_mm", obs.lateral_mm},
                                 {"radius_mm", obs.radius_mm}});
  }
  if (ds.spot_camera) j["spot_camera_mm"] = vec3_to_json(*ds.spot_camera);
  if (ds.calibration) {
    j["calibration"] = {{"origin_mm", vec3_to_json(ds.calibration->line_marker.origin())},
                        {"direction", vec3_to_json(ds.calibration->line_marker.direction())},
                        {"residual_mm", ds.calibration->residual_mm},
                        {"per_point_residuals_mm", ds.calibration->per_point_residuals_mm}};
  }
  if (ds.ground_truth) {
    nlohmann::json deltas = nlohmann::json::array();
    for (double d : ds.ground_truth->delta_thetas_rad) deltas.push_back(rad_to_deg_exact(d));
    j["ground_truth"] = {{"f_reg", transform_to_json(ds.ground_truth->f_reg)},
                         {"lambdas_mm", ds.ground_truth->lambdas_mm},
                         {"delta_thetas_deg", deltas}};
  }
  return j;
}

eval::Dataset dataset_from_json(const nlohmann::json& j) {
  require(j.value("schema", "") == kDatasetSchema, "dataset: unknown or missing schema");
  require(j.contains("units") && j["units"].value("length", "") == "mm" &&
              j["units"].value("angle", "") == "deg",
          "dataset: units must declare mm/deg");

  eval::Dataset ds;
  ds.description = j.value("description", "");
  ds.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    ds.geometry = TrusGeometry(g.at("n_elements").get<int>(), g.at("pitch_mm").get<double>(),
                               g.at("radius_mm").get<double>());
  }
  for (const auto& pose : j.value("marker_poses", nlohmann::json::array())) {
    ds.marker_poses.push_back(transform_from_json(pose));
  }
  for (const auto& obs : j.value("observations", nlohmann::json::array())) {
    ds.observations.emplace_back(deg_to_rad(obs.at("scan_angle_deg").get<double>()),
                                 obs.at("lateral_mm").get<double>(),
                                 obs.at("radius_mm").get<double>());
  }
  if (j.contains("spot_camera_mm")) ds.spot_camera = vec3_from_json(j["spot_camera_mm"]);
  if (j.contains("calibration")) {
    const auto& c = j["calibration"];
    LaserCalibration calib{
        Line3(vec3_from_json(c.at("origin_mm")), vec3_from_json(c.at("direction"))),
        c.value("residual_mm", 0.0),
        c.value("per_point_residuals_mm", std::vector<double>{}),
        {}};
    ds.calibration = std::move(calib);
  }
  if (j.contains("ground_truth")) {
    const auto& g = j["ground_truth"];
    eval::Dataset::GroundTruth truth;
    truth.f_reg = transform_from_json(g.at("f_reg"));
    truth.lambdas_mm = g.value("lambdas_mm", std::vector<double>{});
    for (const auto& d : g.value("delta_thetas_deg", std::vector<double>{})) {
      truth.delta_thetas_rad.push_back(deg_to_rad(d));
    }
    ds.ground_truth = std::move(truth);
  }
  ds.validate();
  return ds;
}

void write_dataset(const std::string& path, const eval::Dataset& ds) {
  write_text_file(path, dataset_to_json(ds).dump(2) + "\n");
}

eval::Dataset read_dataset(const std::string& path) {
  return dataset_from_json(nlohmann::json::parse(read_text_file(path)));
}

nlohmann::json sim_config_to_json(const sim::SimConfig& c) {
  nlohmann::json j;
  j["schema"] = kSimConfigSchema;
  j["trials"] = c.trials;
  j["master_seed"] = c.master_seed;
  j["n_pairs"] = c.n_pairs;
  j["holdout_pairs"] = c.holdout_pairs;
  j["deviation_deg"] = rad_to_deg_exact(c.deviation_range_rad);
  j["theta_bound_deg"] = rad_to_deg_exact(c.theta_bound_rad);
  j["apply_detectability_gate"] = c.apply_detectability_gate;
  j["theta_quant_deg"] = rad_to_deg_exact(c.theta_quant_rad);
  j["evenly_spaced_scans"] = c.evenly_spaced_scans;
  j["parallel"] = c.parallel;
  j["lambda_init_mm"] = c.lambda_init_mm;
  j["noise"] = {{"marker_mean_mm", {c.noise.marker_mean_mm.x(), c.noise.marker_mean_mm.y(),
                                    c.noise.marker_mean_mm.z()}},
                {"marker_sigma_trans_mm",
                 {c.noise.marker_sigma_trans_mm.x(), c.noise.marker_sigma_trans_mm.y(),
                  c.noise.marker_sigma_trans_mm.z()}},
                {"marker_sigma_rot_rad",
                 {c.noise.marker_sigma_rot_rad.x(), c.noise.marker_sigma_rot_rad.y(),
                  c.noise.marker_sigma_rot_rad.z()}},
                {"aim_sigma_mm", {c.noise.aim_sigma_mm[0], c.noise.aim_sigma_mm[1]}}};
  j["geometry"] = {{"n_elements", c.geometry.n_elements},
                   {"pitch_mm", c.geometry.pitch_mm},
                   {"radius_mm", c.geometry.radius_mm}};
  j["translation_box_mm"] = c.translation_box_mm;
  j["scan_range_deg"] = rad_to_deg_exact(c.scan_range_rad);
  j["lateral_range_mm"] = c.lateral_range_mm;
  j["depth_range_mm"] = {c.depth_range_mm[0], c.depth_range_mm[1]};
  j["standoff_range_mm"] = {c.standoff_range_mm[0], c.standoff_range_mm[1]};
  j["board_distance_mm"] = {c.board_distance_mm[0], c.board_distance_mm[1]};
  j["calib_standoff_mm"] = {c.calib_standoff_mm[0], c.calib_standoff_mm[1]};
  j["board_halfwidth_mm"] = c.board_halfwidth_mm;
  j["fiber_cone_halfangle_deg"] = rad_to_deg_exact(c.fiber_cone_halfangle_rad);
  j["pose_counts"] = c.pose_counts;
  nlohmann::json devs = nlohmann::json::array();
  for (double d : c.deviation_sweep_rad) devs.push_back(rad_to_deg_exact(d));
  j["deviation_sweep_deg"] = devs;
  return j;
}

sim::SimConfig sim_config_from_json(const nlohmann::json& j) {
  if (j.contains("schema")) {
    require(j["schema"] == kSimConfigSchema, "sim config: unknown schema");
  }
  sim::SimConfig c;
  c.trials = j.value("trials", c.trials);
  c.master_seed = j.value("master_seed", c.master_seed);
  c.n_pairs = j.value("n_pairs", c.n_pairs);
  c.holdout_pairs = j.value("holdout_pairs", c.holdout_pairs);
  if (j.contains("deviation_deg")) c.deviation_range_rad = deg_to_rad(j["deviation_deg"].get<double>());
  if (j.contains("theta_bound_deg")) c.theta_bound_rad = deg_to_rad(j["theta_bound_deg"].get<double>());
  c.apply_detectability_gate = j.value("apply_detectability_gate", c.apply_detectability_gate);
  if (j.contains("theta_quant_deg")) c.theta_quant_rad = deg_to_rad(j["theta_quant_deg"].get<double>());
  c.evenly_spaced_scans = j.value("evenly_spaced_scans", c.evenly_spaced_scans);
  c.parallel = j.value("parallel", c.parallel);
  c.lambda_init_mm = j.value("lambda_init_mm", c.lambda_init_mm);
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    auto vec3_of = [](const nlohmann::json& a, const Vec3& fallback) {
      return a.is_array() && a.size() == 3 ? Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>())
                                           : fallback;
    };
    c.noise.marker_mean_mm = vec3_of(n.value("marker_mean_mm", nlohmann::json()), c.noise.marker_mean_mm);
    c.noise.marker_sigma_trans_mm =
        vec3_of(n.value("marker_sigma_trans_mm", nlohmann::json()), c.noise.marker_sigma_trans_mm);
    c.noise.marker_sigma_rot_rad =
        vec3_of(n.value("marker_sigma_rot_rad", nlohmann::json()), c.noise.marker_sigma_rot_rad);
    if (n.contains("aim_sigma_mm")) {
      c.noise.aim_sigma_mm = {n["aim_sigma_mm"][0].get<double>(), n["aim_sigma_mm"][1].get<double>()};
    }
  }
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    c.geometry = TrusGeometry(g.value("n_elements", c.geometry.n_elements),
                              g.value("pitch_mm", c.geometry.pitch_mm),
                              g.value("radius_mm", c.geometry.radius_mm));
  }
  c.translation_box_mm = j.value("translation_box_mm", c.translation_box_mm);
  if (j.contains("scan_range_deg")) c.scan_range_rad = deg_to_rad(j["scan_range_deg"].get<double>());
  c.lateral_range_mm = j.value("lateral_range_mm", c.lateral_range_mm);
  auto pair_of = [](const nlohmann::json& a, std::array<double, 2> fallback) {
    return a.is_array() && a.size() == 2
               ? std::array<double, 2>{a[0].get<double>(), a[1].get<double>()}
               : fallback;
  };
  c.depth_range_mm = pair_of(j.value("depth_range_mm", nlohmann::json()), c.depth_range_mm);
  c.standoff_range_mm = pair_of(j.value("standoff_range_mm", nlohmann::json()), c.standoff_range_mm);
  c.board_distance_mm = pair_of(j.value("board_distance_mm", nlohmann::json()), c.board_distance_mm);
  c.calib_standoff_mm = pair_of(j.value("calib_standoff_mm", nlohmann::json()), c.calib_standoff_mm);
  c.board_halfwidth_mm = j.value("board_halfwidth_mm", c.board_halfwidth_mm);
  if (j.contains("fiber_cone_halfangle_deg")) {
    c.fiber_cone_halfangle_rad = deg_to_rad(j["fiber_cone_halfangle_deg"].get<double>());
  }
  if (j.contains("pose_counts")) c.pose_counts = j["pose_counts"].get<std::vector<int>>();
  if (j.contains("deviation_sweep_deg")) {
    c.deviation_sweep_rad.clear();
    for (const auto& d : j["deviation_sweep_deg"]) c.deviation_sweep_rad.push_back(deg_to_rad(d.get<double>()));
  }
  c.validate();
  return c;
}

sim::SimConfig read_sim_config(const std::string& path) {
  return sim_config_from_json(nlohmann::json::parse(read_text_file(path)));
}

std::string calib_sweep_csv(const sim::CalibSweepResult& result) {
  std::ostringstream out;
  out << "n_poses,trial,line_error_mm,fit_residual_mm\n";
  for (const auto& row : result.trials) {
    out << row.n_poses << ',' << row.trial << ',' << fmt(row.line_error_mm) << ','
        << fmt(row.fit_residual_mm) << '\n';
  }
  return out.str();
}

std::string reg_sweep_csv(const sim::RegSweepResult& result) {
  std::ostringstream out;
  out << "deviation_deg,trial,tre_mm,iters,converged\n";
  for (const auto& row : result.trials) {
    out << fmt(rad_to_deg_exact(row.deviation_rad)) << ',' << row.trial << ',' << fmt(row.tre_mm)
        << ',' << row.outer_iterations << ',' << (row.converged ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::json calib_sweep_to_json(const sim::CalibSweepResult& result) {
  nlohmann::json j;
  j["schema"] = kSweepSchema;
  j["kind"] = "calib";
  j["trials"] = nlohmann::json::array();
  for (const auto& r : result.trials) {
    j["trials"].push_back({{"n_poses", r.n_poses},
                           {"trial", r.trial},
                           {"line_error_mm", r.line_error_mm},
                           {"fit_residual_mm", r.fit_residual_mm}});
  }
  j["summary"] = nlohmann::json::array();
  for (const auto& r : result.summary) {
    j["summary"].push_back({{"n_poses", r.n_poses},
                            {"mean_error_mm", r.mean_error_mm},
                            {"std_error_mm", r.std_error_mm},
                            {"mean_fit_residual_mm", r.mean_fit_residual_mm}});
  }
  return j;
}

nlohmann::json reg_sweep_to_json(const sim::RegSweepResult& result) {
  nlohmann::json j;
  j["schema"] = kSweepSchema;
  j["kind"] = "reg";
  j["trials"] = nlohmann::json::array();
  for (const auto& r : result.trials) {
    j["trials"].push_back({{"deviation_deg", rad_to_deg_exact(r.deviation_rad)},
                           {"trial", r.trial},
                           {"tre_mm", r.tre_mm},
                           {"iters", r.outer_iterations},
                           {"converged", r.converged}});
  }
  j["summary"] = nlohmann::json::array();
  for (const auto& r : result.summary) {
    j["summary"].push_back({{"deviation_deg", rad_to_deg_exact(r.deviation_rad)},
                            {"mean_tre_mm", r.mean_tre_mm},
                            {"std_tre_mm", r.std_tre_mm},
                            {"mean_outer_iterations", r.mean_outer_iterations}});
  }
  return j;
}

std::string sweep_json_to_csv(const nlohmann::json& j) {
  require(j.value("schema", "") == kSweepSchema, "sweep report: unknown or missing schema");
  const std::string kind = j.value("kind", "");
  std::ostringstream out;
  if (kind == "calib") {
    out << "n_poses,trial,line_error_mm,fit_residual_mm\n";
    for (const auto& r : j.at("trials")) {
      out << r.at("n_poses").get<int>() << ',' << r.at("trial").get<int>() << ','
          << fmt(r.at("line_error_mm").get<double>()) << ','
          << fmt(r.at("fit_residual_mm").get<double>()) << '\n';
    }
  } else if (kind == "reg") {
    out << "deviation_deg,trial,tre_mm,iters,converged\n";
    for (const auto& r : j.at("trials")) {
      out << fmt(r.at("deviation_deg").get<double>()) << ',' << r.at("trial").get<int>() << ','
          << fmt(r.at("tre_mm").get<double>()) << ',' << r.at("iters").get<int>() << ','
          << (r.at("converged").get<bool>() ? 1 : 0) << '\n';
    }
  } else {
    throw std::invalid_argument("sweep report: unknown kind '" + kind + "'");
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace arcline::io
