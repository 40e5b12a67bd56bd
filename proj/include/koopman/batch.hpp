#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"

namespace koopman {

/// Snapshot data: x_j, optional p_j, and successors x_j+ = Fl^t(x_j) under p_j.
struct SnapshotSet {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> params;  // empty => autonomous
  std::vector<Eigen::VectorXd> successors;
  double t = 0.0;

  std::size_t size() const { return states.size(); }
  bool parametric() const { return !params.empty(); }
  void validate() const;
};

enum class SamplingMode { iid, trajectory };

struct SnapshotOptions {
  int n = 5000;
  std::uint64_t seed = 0;
  double t = 0.1;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  SamplingMode sampling = SamplingMode::iid;
  int trajectory_length = 10;  // snapshot pairs per rollout in trajectory mode
  bool sample_params = true;   // false => autonomous data at p = 0
};

// The columns/points of every batch kernel are independent, so the OpenMP
// versions write disjoint outputs and are bit-identical to the serial
// references at any thread count. The serial versions are kept for testing
// and for the kernel benchmark.

/// M x N matrix of lifted states, column j = Psi(x_j).
Eigen::MatrixXd lift_batch(const Dictionary& dict, const std::vector<Eigen::VectorXd>& states);
Eigen::MatrixXd lift_batch_serial(const Dictionary& dict,
                                  const std::vector<Eigen::VectorXd>& states);

/// Integrates one step of length t for every (state, parameter) pair.
std::vector<Eigen::VectorXd> integrate_batch(const ParametricSystem& sys,
                                             const std::vector<Eigen::VectorXd>& states,
                                             const std::vector<Eigen::VectorXd>& params, double t,
                                             double rel_tol, double abs_tol);
std::vector<Eigen::VectorXd> integrate_batch_serial(const ParametricSystem& sys,
                                                    const std::vector<Eigen::VectorXd>& states,
                                                    const std::vector<Eigen::VectorXd>& params,
                                                    double t, double rel_tol, double abs_tol);

/// Samples (x_j, p_j) i.i.d. uniform on X x L (or along short trajectories)
/// and integrates the successors. Deterministic for a fixed seed.
SnapshotSet generate_snapshots(const ParametricSystem& sys, const SnapshotOptions& opts);
SnapshotSet generate_snapshots_serial(const ParametricSystem& sys, const SnapshotOptions& opts);

}  // namespace koopman
