// JSON dataset and sim-config files, CSV sweep reports.
//
// File conventions: lengths in mm, angles in degrees, transforms as
// 16-element row-major arrays. In memory everything is mm/radians; the
// writer picks the degree double that reproduces the stored radians
// exactly on re-read, so write/read round trips are stable.

#ifndef ARCLINE_DATASET_IO_HPP
#define ARCLINE_DATASET_IO_HPP

#include "arcline/evaluation.hpp"
#include "arcline/simulation.hpp"

#include <json.hpp>

#include <string>

namespace arcline::io {

inline constexpr char kDatasetSchema[] = "arcline/1";
inline constexpr char kSimConfigSchema[] = "arcline-sim/1";
inline constexpr char kSweepSchema[] = "arcline-sweep/1";

double deg_to_rad(double deg);
/// Degrees double chosen so deg_to_rad(result) == rad bit-for-bit
/// whenever such a double exists.
double rad_to_deg_exact(double rad);

nlohmann::json dataset_to_json(const eval::Dataset& ds);
eval::Dataset dataset_from_json(const nlohmann::json& j);
void write_dataset(const std::string& path, const eval::Dataset& ds);
eval::Dataset read_dataset(const std::string& path);

nlohmann::json sim_config_to_json(const sim::SimConfig& config);
/// Missing fields fall back to the built-in default SimConfig.
sim::SimConfig sim_config_from_json(const nlohmann::json& j);
sim::SimConfig read_sim_config(const std::string& path);

// Per-trial CSV tables (plot-ready, fixed columns).
std::string calib_sweep_csv(const sim::CalibSweepResult& result);
std::string reg_sweep_csv(const sim::RegSweepResult& result);

// Sweep results as JSON for archival; `report` re-emits the CSV from it.
nlohmann::json calib_sweep_to_json(const sim::CalibSweepResult& result);
nlohmann::json reg_sweep_to_json(const sim::RegSweepResult& result);
std::string sweep_json_to_csv(const nlohmann::json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace arcline::io

#endif  // ARCLINE_DATASET_IO_HPP
