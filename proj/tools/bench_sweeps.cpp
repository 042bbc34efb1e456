// Times the Monte-Carlo sweep kernels against their serial reference and
// checks that both produce identical CSV bytes.

#include "arcline/dataset_io.hpp"
#include "arcline/simulation.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  int trials = argc > 1 ? std::atoi(argv[1]) : 60;

  arcline::sim::SimConfig config;
  config.trials = trials;
  config.master_seed = 20240601;

  std::printf("threads available: %d, trials per sweep point: %d\n", omp_get_max_threads(), trials);

  {
    arcline::sim::SimConfig serial = config;
    serial.parallel = false;
    auto t0 = std::chrono::steady_clock::now();
    const auto ref = arcline::sim::run_calibration_sweep(serial);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto par = arcline::sim::run_calibration_sweep(config);
    const double t_parallel = seconds_since(t0);

    const bool identical =
        arcline::io::calib_sweep_csv(ref) == arcline::io::calib_sweep_csv(par);
    std::printf("calib-sweep: serial %.3fs, parallel %.3fs, speedup %.2fx, identical csv: %s\n",
                t_serial, t_parallel, t_serial / t_parallel, identical ? "yes" : "NO");
    if (!identical) return 1;
  }
  {
    arcline::sim::SimConfig serial = config;
    serial.parallel = false;
    auto t0 = std::chrono::steady_clock::now();
    const auto ref = arcline::sim::run_registration_sweep(serial);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto par = arcline::sim::run_registration_sweep(config);
    const double t_parallel = seconds_since(t0);

    const bool identical = arcline::io::reg_sweep_csv(ref) == arcline::io::reg_sweep_csv(par);
    std::printf("reg-sweep:   serial %.3fs, parallel %.3fs, speedup %.2fx, identical csv: %s\n",
                t_serial, t_parallel, t_serial / t_parallel, identical ? "yes" : "NO");
    if (!identical) return 1;
  }
  return 0;
}
