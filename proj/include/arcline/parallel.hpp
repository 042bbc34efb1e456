// Trial-level parallelism. Trials are independent and written to their own
// slot, so the parallel kernel and the serial reference produce bitwise
// identical outputs; tests and the benchmark tool compare the two.

#ifndef ARCLINE_PARALLEL_HPP
#define ARCLINE_PARALLEL_HPP

#include <vector>

namespace arcline {

template <class Row, class Fn>
std::vector<Row> run_trials_parallel(int n_trials, Fn&& trial) {
  std::vector<Row> rows(static_cast<std::size_t>(n_trials));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < n_trials; ++t) {
    rows[static_cast<std::size_t>(t)] = trial(t);
  }
  return rows;
}

// Serial reference for the kernel above.
template <class Row, class Fn>
std::vector<Row> run_trials_serial(int n_trials, Fn&& trial) {
  std::vector<Row> rows(static_cast<std::size_t>(n_trials));
  for (int t = 0; t < n_trials; ++t) {
    rows[static_cast<std::size_t>(t)] = trial(t);
  }
  return rows;
}

template <class Row, class Fn>
std::vector<Row> run_trials(int n_trials, bool parallel, Fn&& trial) {
  return parallel ? run_trials_parallel<Row>(n_trials, trial)
                  : run_trials_serial<Row>(n_trials, trial);
}

}  // namespace arcline

#endif  // ARCLINE_PARALLEL_HPP
