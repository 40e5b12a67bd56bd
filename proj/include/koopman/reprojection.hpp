#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "koopman/covariance.hpp"
#include "koopman/dictionary.hpp"
#include "koopman/dynamics.hpp"

namespace koopman {

struct WeightMatrix {
  enum class Kind { coordinate, inverse_covariance, custom };
  Eigen::MatrixXd W;
  Kind kind = Kind::custom;
};

struct ProjectionResult {
  Eigen::VectorXd x;  // recovered state
  Eigen::VectorXd z;  // Psi(x), recomputed
  int iterations = 0;
  std::vector<double> step_norms;
  bool converged = false;
  double objective = 0.0;  // |Psi(x) - z_target|^2_W
};

/// Diagonal 0/1 weight with ones on the injectivity-witness entries
/// (coordinate entries when present, odd pure powers otherwise).
WeightMatrix coordinate_weight(const Dictionary& dict);

/// pi_{W_c}: witness readout followed by lifting. Exact on the manifold.
ProjectionResult coordinate_project(const Dictionary& dict, const Eigen::VectorXd& z);

struct NewtonOptions {
  double tol = 1e-8;
  int k_max = 50;
  /// Iterates are clamped to this box inflated by `inflation` when present.
  std::optional<Box> domain;
  double inflation = 0.1;
  int max_halvings = 20;
};

/// Riemannian Newton iteration for the weighted closest-point projection onto
/// im(Psi): v = -(DPsi^T W DPsi)^+ DPsi^T W (Psi(x) - z), retraction x <- x + v.
/// The full step is halved (up to max_halvings) whenever it would increase the
/// objective.
ProjectionResult newton_project(const Dictionary& dict, const WeightMatrix& W,
                                const Eigen::VectorXd& z, const Eigen::VectorXd& x0,
                                const NewtonOptions& opts = {});

/// Exhaustive minimization of |Psi(x) - z|^2_W over a regular grid; ties break
/// to the lowest linear grid index. Verification oracle only.
ProjectionResult brute_force_project(const Dictionary& dict, const Eigen::MatrixXd& W,
                                     const Eigen::VectorXd& z, const Box& domain,
                                     int points_per_axis);
ProjectionResult brute_force_project_serial(const Dictionary& dict, const Eigen::MatrixXd& W,
                                            const Eigen::VectorXd& z, const Box& domain,
                                            int points_per_axis);

/// W = sigma_at(Q, p, ridge)^{-1} via eigendecomposition (clip-then-invert).
WeightMatrix ml_weight(const CovarianceSurrogate& Q, const Eigen::VectorXd& p, double ridge);

}  // namespace koopman
