// Integration checks of the command-line surface: exit codes and the
// validation paths. The binary path comes from the build system.

#include "arcline/dataset_io.hpp"
#include "arcline/simulation.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

using namespace arcline;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ARCLINE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() : path(std::filesystem::temp_directory_path() / "arcline_cli_test") {
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: valid pipeline returns success") {
  TempDir dir;
  const std::string ds = dir.file("ds.json");
  CHECK(run_cli("simulate dataset --seed 11 --out " + ds) == 0);
  CHECK(run_cli("register " + ds) == 0);
  CHECK(run_cli("evaluate tre " + ds + " --n-fit 10 --seed 7") == 0);
  CHECK(run_cli("track " + ds + " --pair 0") == 0);
}

TEST_CASE("cli: collinear 3-pair dataset is rejected with exit 1") {
  // All camera-frame initialization points fall on one line: parallel
  // beams whose origins are translated along x only.
  eval::Dataset ds;
  ds.geometry = TrusGeometry(128, 0.3, 10.0);
  ds.calibration = LaserCalibration{Line3(Vec3::Zero(), Vec3::UnitZ()), 0.0, {}, {}};
  for (int i = 0; i < 3; ++i) {
    ds.marker_poses.push_back(RigidTransform::translate(-10.0 * i, 0.0, 0.0));
    ds.observations.emplace_back(0.1 * i, 2.0 * i, 30.0);
  }
  TempDir dir;
  const std::string path = dir.file("collinear.json");
  io::write_dataset(path, ds);
  CHECK(run_cli("register " + path) == 1);
}

TEST_CASE("cli: usage and validation failures exit with 1") {
  TempDir dir;
  CHECK(run_cli("--definitely-not-a-flag") == 1);
  CHECK(run_cli("register") == 1);                       // missing dataset argument
  CHECK(run_cli("register " + dir.file("missing.json")) == 1);
  CHECK(run_cli("--help") == 0);

  const std::string ds = dir.file("ds.json");
  REQUIRE(run_cli("simulate dataset --seed 3 --n-pairs 5 --out " + ds) == 0);
  CHECK(run_cli("track " + ds + " --pair 99") == 1);     // index out of range
  CHECK(run_cli("evaluate tre " + ds + " --n-fit 5 --seed 1") == 1);  // no holdout left
}
