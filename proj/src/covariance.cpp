#include "koopman/covariance.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <set>

namespace koopman {

Eigen::VectorXd CovarianceSurrogate::augment(const Eigen::VectorXd& p) {
  Eigen::VectorXd pbar(p.size() + 1);
  pbar[0] = 1.0;
  pbar.tail(p.size()) = p;
  return pbar;
}

Eigen::MatrixXd CovarianceSurrogate::quad(const Eigen::VectorXd& pbar) const {
  if (pbar.size() != m + 1)
    throw std::invalid_argument("CovarianceSurrogate::quad: augmented parameter dimension mismatch");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i <= m; ++i)
    for (int j = 0; j <= m; ++j) S += pbar[i] * pbar[j] * block(i, j);
  return 0.5 * (S + S.transpose());
}

std::vector<ResidualSample> residuals(const KoopmanModel& model, const SnapshotSet& data) {
  data.validate();
  const int N = static_cast<int>(data.size());
  const int data_m = data.parametric() ? static_cast<int>(data.params[0].size()) : 0;
  if (data_m != model.m)
    throw std::invalid_argument("residuals: parameter dimension mismatch with model");
  std::vector<ResidualSample> out(static_cast<std::size_t>(N));
#pragma omp parallel for schedule(static)
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd p = data.parametric() ? data.params[static_cast<std::size_t>(j)]
                                                : Eigen::VectorXd(0);
    ResidualSample& s = out[static_cast<std::size_t>(j)];
    s.pbar = CovarianceSurrogate::augment(p);
    s.r = model.dict.lift(data.successors[static_cast<std::size_t>(j)]) -
          model.apply(p, model.dict.lift(data.states[static_cast<std::size_t>(j)]));
  }
  return out;
}

namespace {

// Fixed-block accumulation: block partials are computed in parallel and summed
// in block order, so the result is independent of the thread count.
constexpr int kReductionBlock = 1024;

template <typename PerSample>
Eigen::MatrixXd blocked_mean(int n, int rows, int cols, PerSample&& per_sample) {
  const int nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(nblocks));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < nblocks; ++b) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
    const int begin = b * kReductionBlock;
    const int end = std::min(n, begin + kReductionBlock);
    for (int j = begin; j < end; ++j) acc += per_sample(j);
    partial[static_cast<std::size_t>(b)] = std::move(acc);
  }
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& pm : partial) total += pm;
  return total / static_cast<double>(n);
}

}  // namespace

CovarianceSurrogate fit_Q(const std::vector<ResidualSample>& samples, int m) {
  if (samples.empty()) throw std::invalid_argument("fit_Q: no residual samples");
  const int N = static_cast<int>(samples.size());
  const int M = static_cast<int>(samples[0].r.size());
  const int a = m + 1;
  for (const auto& s : samples)
    if (s.r.size() != M || s.pbar.size() != a)
      throw std::invalid_argument("fit_Q: inconsistent sample dimensions");

  std::set<std::vector<double>> distinct;
  for (const auto& s : samples) {
    distinct.insert(std::vector<double>(s.pbar.data(), s.pbar.data() + s.pbar.size()));
    if (static_cast<int>(distinct.size()) >= a * (a + 1) / 2) break;
  }
  if (static_cast<int>(distinct.size()) < a * (a + 1) / 2)
    throw IdentifiabilityError("fit_Q: need at least " + std::to_string(a * (a + 1) / 2) +
                               " distinct parameter values, found " +
                               std::to_string(distinct.size()));

  // Y = mean[(r pbar^T) (x) (r pbar^T)], X = mean[(pbar pbar^T) (x) (pbar pbar^T)].
  Eigen::MatrixXd Y = blocked_mean(N, M * M, a * a, [&](int j) -> Eigen::MatrixXd {
    const auto& s = samples[static_cast<std::size_t>(j)];
    Eigen::MatrixXd rp = s.r * s.pbar.transpose();
    return Eigen::kroneckerProduct(rp, rp);
  });
  Eigen::MatrixXd X = blocked_mean(N, a * a, a * a, [&](int j) -> Eigen::MatrixXd {
    const auto& s = samples[static_cast<std::size_t>(j)];
    Eigen::MatrixXd pp = s.pbar * s.pbar.transpose();
    return Eigen::kroneckerProduct(pp, pp);
  });

  // Pseudoinverse of X, singular values below 1e-12 * sigma_max dropped.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-12 * sv(0)) inv_sv(i) = 1.0 / sv(i);
  Eigen::MatrixXd Xpinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

  Eigen::MatrixXd G = Y * Xpinv;  // M^2 x a^2; column i*a+j responds to pbar_i pbar_j

  CovarianceSurrogate Q;
  Q.m = m;
  Q.M = M;
  Q.blocks.assign(static_cast<std::size_t>(a * a), Eigen::MatrixXd());
  auto unvec = [M](const Eigen::VectorXd& v) {
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), M, M).eval();
  };
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < a; ++j) {
      Eigen::MatrixXd Cij = unvec(G.col(i * a + j));
      Eigen::MatrixXd Cji = unvec(G.col(j * a + i));
      Q.block(i, j) = 0.5 * (Cij + Cji.transpose());
    }
  return Q;
}

Eigen::MatrixXd sigma_at(const CovarianceSurrogate& Q, const Eigen::VectorXd& p, double ridge) {
  if (ridge < 0) throw std::invalid_argument("sigma_at: ridge must be nonnegative");
  Eigen::MatrixXd S = Q.quad(CovarianceSurrogate::augment(p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (int i = 0; i < lambda.size(); ++i) lambda[i] = std::max(lambda[i] + ridge, ridge);
  Eigen::MatrixXd out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd propagate_covariance(const KoopmanModel& model, const CovarianceSurrogate& Q,
                                     const Eigen::VectorXd& p, const Eigen::MatrixXd& sigma_k) {
  if (sigma_k.rows() != model.lifted_dim() || sigma_k.cols() != model.lifted_dim())
    throw std::invalid_argument("propagate_covariance: covariance dimension mismatch");
  Eigen::MatrixXd K = model.combine(p);
  Eigen::MatrixXd out = Q.quad(CovarianceSurrogate::augment(p)) + K * sigma_k * K.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd analytic_X_uniform(const Box& param_domain) {
  const int m = param_domain.dim();
  const int a = m + 1;
  // E[p_c^e] for a uniform component.
  auto moment = [&](int c, int e) {
    double lo = param_domain.lo[c], hi = param_domain.hi[c];
    if (e == 0) return 1.0;
    if (hi == lo) return std::pow(lo, e);
    return (std::pow(hi, e + 1) - std::pow(lo, e + 1)) /
           (static_cast<double>(e + 1) * (hi - lo));
  };
  Eigen::MatrixXd X(a * a, a * a);
  for (int i = 0; i < a; ++i)
    for (int k = 0; k < a; ++k)
      for (int j = 0; j < a; ++j)
        for (int l = 0; l < a; ++l) {
          std::vector<int> exponent(static_cast<std::size_t>(m), 0);
          for (int idx : {i, j, k, l})
            if (idx > 0) exponent[static_cast<std::size_t>(idx - 1)]++;
          double v = 1.0;
          for (int c = 0; c < m; ++c) v *= moment(c, exponent[static_cast<std::size_t>(c)]);
          X(i * a + k, j * a + l) = v;
        }
  return X;
}

}  // namespace koopman
