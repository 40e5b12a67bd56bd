#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "koopman/batch.hpp"
#include "koopman/dictionary.hpp"

namespace koopman {

struct SingularGramError : std::runtime_error {
  double smallest_singular_value;
  SingularGramError(const std::string& what, double sv)
      : std::runtime_error(what), smallest_singular_value(sv) {}
};

/// Fitted parametric Koopman compression: blocks K_0..K_m so that the lifted
/// one-step model is z+ = (K_0 + sum_i p_i K_i) z.
struct KoopmanModel {
  Dictionary dict;
  double t = 0.0;
  int m = 0;
  std::vector<Eigen::MatrixXd> blocks;  // m+1 square M x M matrices
  /// Per-feature max-abs over the training set (regression preconditioner;
  /// also used to evaluate covariance trigger measures in scaled coordinates).
  Eigen::VectorXd feature_scale;
  Box state_domain;
  Box param_domain;

  int lifted_dim() const { return dict.size(); }

  /// K_0 + sum_i p_i K_i.
  Eigen::MatrixXd combine(const Eigen::VectorXd& p) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& p, const Eigen::VectorXd& z) const;
};

struct FitOptions {
  double ridge = 0.0;
  /// On a singular Gram matrix with ridge = 0, retry with
  /// ridge = 1e-10 * trace(Gram)/cols instead of failing.
  bool auto_ridge_fallback = true;
};

struct FitDiagnostics {
  double residual_rms = 0.0;          // lifted one-step residual, training data
  double smallest_singular = 0.0;     // of the (scaled) regression matrix
  double condition_number = 0.0;
  double ridge_used = 0.0;
};

/// Least-squares fit of the autonomous compression (data.params must be empty).
KoopmanModel fit_autonomous(const Dictionary& dict, const SnapshotSet& data,
                            const FitOptions& opts = {}, FitDiagnostics* diag = nullptr);

/// Least-squares fit over the augmented features pbar (x) Psi(x), pbar = (1, p),
/// partitioned into blocks K_0..K_m. Features are scaled by per-feature max-abs
/// before the solve; the stored blocks are in unscaled coordinates.
KoopmanModel fit_parametric(const Dictionary& dict, const SnapshotSet& data,
                            const FitOptions& opts = {}, FitDiagnostics* diag = nullptr);

}  // namespace koopman
