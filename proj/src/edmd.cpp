#include "koopman/edmd.hpp"

#include <cmath>
#include <string>

#include "koopman/log.hpp"

namespace koopman {

Eigen::MatrixXd KoopmanModel::combine(const Eigen::VectorXd& p) const {
  if (p.size() != m)
    throw std::invalid_argument("KoopmanModel::combine: parameter dimension mismatch");
  Eigen::MatrixXd K = blocks[0];
  for (int i = 0; i < m; ++i) K += p[i] * blocks[static_cast<std::size_t>(i) + 1];
  return K;
}

Eigen::VectorXd KoopmanModel::apply(const Eigen::VectorXd& p, const Eigen::VectorXd& z) const {
  if (p.size() != m)
    throw std::invalid_argument("KoopmanModel::apply: parameter dimension mismatch");
  if (z.size() != lifted_dim())
    throw std::invalid_argument("KoopmanModel::apply: lifted dimension mismatch");
  Eigen::VectorXd out = blocks[0] * z;
  for (int i = 0; i < m; ++i) out += p[i] * (blocks[static_cast<std::size_t>(i) + 1] * z);
  return out;
}

namespace {

struct SolveResult {
  Eigen::MatrixXd coeffs;  // cols(A) x M, solution of min |A C - B|_F
  double smallest_singular = 0.0;
  double condition = 0.0;
  double ridge_used = 0.0;
};

// min_C |A C - B|_F^2 + ridge |C|_F^2. SVD route for ridge = 0, normal
// equations with LLT for ridge > 0 (the augmented Gram matrix is often
// ill-conditioned for high-degree monomials, hence the SVD default).
SolveResult solve_least_squares(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const FitOptions& opts) {
  SolveResult res;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  res.smallest_singular = sv(sv.size() - 1);
  res.condition = (res.smallest_singular > 0) ? sv(0) / res.smallest_singular
                                              : std::numeric_limits<double>::infinity();

  double ridge = opts.ridge;
  if (ridge == 0.0) {
    // Underdetermined systems (N < cols) only expose min(N, cols) singular
    // values, so rank-count against the full column dimension.
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-12 * sv(0)) ++rank;
    const bool singular = rank < static_cast<int>(A.cols());
    if (!singular) {
      // X = V diag(1/s) U^T B
      Eigen::MatrixXd tmp = svd.matrixU().transpose() * B;
      for (int i = 0; i < sv.size(); ++i) tmp.row(i) /= sv(i);
      res.coeffs = svd.matrixV() * tmp;
      res.ridge_used = 0.0;
      return res;
    }
    if (!opts.auto_ridge_fallback)
      throw SingularGramError("fit: rank-deficient regression matrix, smallest singular value " +
                                  std::to_string(res.smallest_singular),
                              res.smallest_singular);
    ridge = 1e-10 * sv.squaredNorm() / static_cast<double>(A.cols());
    KOOPMAN_LOG_WARN("fit: singular Gram matrix (sigma_min = %g), falling back to ridge = %g",
                     res.smallest_singular, ridge);
  }
  Eigen::MatrixXd G = A.transpose() * A;
  G.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw SingularGramError("fit: Cholesky of ridge-regularized Gram matrix failed",
                            res.smallest_singular);
  res.coeffs = llt.solve(A.transpose() * B);
  res.ridge_used = ridge;
  return res;
}

}  // namespace

KoopmanModel fit_parametric(const Dictionary& dict, const SnapshotSet& data,
                            const FitOptions& opts, FitDiagnostics* diag) {
  data.validate();
  const int N = static_cast<int>(data.size());
  const int M = dict.size();
  const int m = data.parametric() ? static_cast<int>(data.params[0].size()) : 0;
  for (const auto& p : data.params)
    if (static_cast<int>(p.size()) != m)
      throw std::invalid_argument("fit_parametric: inconsistent parameter dimensions");

  Eigen::MatrixXd PsiX = lift_batch(dict, data.states);   // M x N
  Eigen::MatrixXd PsiY = lift_batch(dict, data.successors);

  // Per-feature max-abs scaling over the training inputs; zero-variance
  // features keep scale 1.
  Eigen::VectorXd scale = PsiX.cwiseAbs().rowwise().maxCoeff();
  for (int k = 0; k < M; ++k)
    if (scale[k] == 0.0) scale[k] = 1.0;
  Eigen::VectorXd inv_scale = scale.cwiseInverse();
  PsiX.array().colwise() *= inv_scale.array();
  PsiY.array().colwise() *= inv_scale.array();

  // Row j of A is pbar_j (x) Psi'(x_j); row j of B is Psi'(x_j+).
  Eigen::MatrixXd A(N, M * (m + 1));
  for (int j = 0; j < N; ++j) {
    A.block(j, 0, 1, M) = PsiX.col(j).transpose();
    for (int i = 0; i < m; ++i)
      A.block(j, (i + 1) * M, 1, M) =
          data.params[static_cast<std::size_t>(j)][i] * PsiX.col(j).transpose();
  }
  Eigen::MatrixXd B = PsiY.transpose();

  SolveResult sol = solve_least_squares(A, B, opts);

  KoopmanModel model;
  model.dict = dict;
  model.t = data.t;
  model.m = m;
  model.feature_scale = scale;
  model.blocks.reserve(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i <= m; ++i) {
    // Unscale: K_i = D K'_i D^{-1} with D = diag(scale).
    Eigen::MatrixXd Ki = sol.coeffs.block(i * M, 0, M, M).transpose();
    Ki = scale.asDiagonal() * Ki * inv_scale.asDiagonal();
    model.blocks.push_back(std::move(Ki));
  }

  if (diag) {
    Eigen::MatrixXd R = A * sol.coeffs - B;
    diag->residual_rms = std::sqrt(R.squaredNorm() / static_cast<double>(N));
    diag->smallest_singular = sol.smallest_singular;
    diag->condition_number = sol.condition;
    diag->ridge_used = sol.ridge_used;
  }
  return model;
}

KoopmanModel fit_autonomous(const Dictionary& dict, const SnapshotSet& data,
                            const FitOptions& opts, FitDiagnostics* diag) {
  if (data.parametric())
    throw std::invalid_argument("fit_autonomous: data carries parameters; use fit_parametric");
  return fit_parametric(dict, data, opts, diag);
}

}  // namespace koopman
