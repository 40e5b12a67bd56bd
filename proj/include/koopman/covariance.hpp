#pragma once

#include <Eigen/Dense>
#include <vector>

#include "koopman/edmd.hpp"

namespace koopman {

struct ResidualSample {
  Eigen::VectorXd r;     // lifted residual, length M
  Eigen::VectorXd pbar;  // augmented parameter (1, p), length m+1
};

struct IdentifiabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symmetric matrix-valued bilinear form Q with (m+1) x (m+1) blocks of
/// M x M matrices; Sigma(p) = sum_ij pbar_i pbar_j Q_ij.
struct CovarianceSurrogate {
  int m = 0;
  int M = 0;
  std::vector<Eigen::MatrixXd> blocks;  // (m+1)^2 in row-major block order

  const Eigen::MatrixXd& block(int i, int j) const {
    return blocks[static_cast<std::size_t>(i * (m + 1) + j)];
  }
  Eigen::MatrixXd& block(int i, int j) { return blocks[static_cast<std::size_t>(i * (m + 1) + j)]; }

  /// sum_ij pbar_i pbar_j Q_ij, symmetrized.
  Eigen::MatrixXd quad(const Eigen::VectorXd& pbar) const;

  static Eigen::VectorXd augment(const Eigen::VectorXd& p);
};

/// r_j = Psi(x_j+) - (K_0 + sum p_i K_i) Psi(x_j), with pbar_j = (1, p_j).
std::vector<ResidualSample> residuals(const KoopmanModel& model, const SnapshotSet& data);

/// Monte-Carlo estimate of the quadratic covariance surrogate:
/// vec(Q(pbar,pbar)) = Y X^+ (pbar (x) pbar), with Y, X averaged over the
/// residual samples; blocks symmetrized so Q_ij = Q_ji^T holds exactly.
CovarianceSurrogate fit_Q(const std::vector<ResidualSample>& samples, int m);

/// Sigma(p) + ridge I with eigenvalues clipped from below at ridge
/// (eigendecomposition route; positive definite whenever ridge > 0).
Eigen::MatrixXd sigma_at(const CovarianceSurrogate& Q, const Eigen::VectorXd& p, double ridge);

/// Sigma_{k+1} = Q(pbar, pbar) + K Sigma_k K^T, symmetrized,
/// with K = K_0 + sum p_i K_i.
Eigen::MatrixXd propagate_covariance(const KoopmanModel& model, const CovarianceSurrogate& Q,
                                     const Eigen::VectorXd& p, const Eigen::MatrixXd& sigma_k);

/// Closed-form X = E[pbar pbar^T (x) pbar pbar^T] for p uniform on the box;
/// cross-check for the Monte-Carlo estimator used by fit_Q.
Eigen::MatrixXd analytic_X_uniform(const Box& param_domain);

}  // namespace koopman
