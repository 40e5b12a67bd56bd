// Timing comparison of the OpenMP batch kernels against their serial
// reference implementations. Also verifies that both produce identical bits.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "koopman/batch.hpp"
#include "koopman/reprojection.hpp"

using namespace koopman;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#endif
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  ParametricSystem lorenz = builtin_system(SystemName::lorenz);
  Dictionary dict(3, 3);

  {
    auto states = sample_states(lorenz.state_domain, 200000, 7);
    Eigen::MatrixXd a, b;
    double ts = time_ms([&] { a = lift_batch_serial(dict, states); }, 3);
    double tp = time_ms([&] { b = lift_batch(dict, states); }, 3);
    report("lift_batch (200k x M=20)", ts, tp, a == b);
  }
  {
    SnapshotOptions opts;
    opts.n = 20000;
    opts.seed = 11;
    opts.t = 0.01;
    SnapshotSet a, b;
    double ts = time_ms([&] { a = generate_snapshots_serial(lorenz, opts); }, 1);
    double tp = time_ms([&] { b = generate_snapshots(lorenz, opts); }, 1);
    bool same = a.size() == b.size();
    for (std::size_t j = 0; same && j < a.size(); ++j)
      same = a.successors[j] == b.successors[j];
    report("generate_snapshots (20k)", ts, tp, same);
  }
  {
    Eigen::VectorXd x(3);
    x << 2.0, -3.0, 25.0;
    Eigen::VectorXd z = dict.lift(x);
    z.array() += 0.05;
    Eigen::MatrixXd W = Eigen::MatrixXd::Identity(dict.size(), dict.size());
    ProjectionResult a, b;
    double ts = time_ms([&] { a = brute_force_project_serial(dict, W, z, lorenz.state_domain, 81); }, 1);
    double tp = time_ms([&] { b = brute_force_project(dict, W, z, lorenz.state_domain, 81); }, 1);
    report("brute_force_project (81^3)", ts, tp, a.x == b.x);
  }
  return 0;
}
