#include "koopman/reprojection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace koopman {

WeightMatrix coordinate_weight(const Dictionary& dict) {
  const int M = dict.size();
  WeightMatrix wm;
  wm.kind = WeightMatrix::Kind::coordinate;
  wm.W = Eigen::MatrixXd::Zero(M, M);
  for (int j = 0; j < dict.dim(); ++j) wm.W(dict.witness_index(j), dict.witness_index(j)) = 1.0;
  return wm;
}

ProjectionResult coordinate_project(const Dictionary& dict, const Eigen::VectorXd& z) {
  ProjectionResult res;
  res.x = dict.invert_on_manifold(z);
  res.z = dict.lift(res.x);
  res.iterations = 0;
  res.converged = true;
  WeightMatrix wc = coordinate_weight(dict);
  Eigen::VectorXd diff = res.z - z;
  res.objective = diff.dot(wc.W * diff);
  return res;
}

namespace {

double objective_at(const Dictionary& dict, const Eigen::MatrixXd& W, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& x) {
  Eigen::VectorXd diff = dict.lift(x) - z;
  return diff.dot(W * diff);
}

}  // namespace

ProjectionResult newton_project(const Dictionary& dict, const WeightMatrix& W,
                                const Eigen::VectorXd& z, const Eigen::VectorXd& x0,
                                const NewtonOptions& opts) {
  if (z.size() != dict.size()) throw std::invalid_argument("newton_project: z dimension mismatch");
  if (x0.size() != dict.dim()) throw std::invalid_argument("newton_project: x0 dimension mismatch");
  if (opts.tol <= 0) throw std::invalid_argument("newton_project: tol must be positive");

  std::optional<Box> clamp_box;
  if (opts.domain) clamp_box = opts.domain->inflated(opts.inflation);
  auto clamp = [&](const Eigen::VectorXd& x) { return clamp_box ? clamp_box->clamp(x) : x; };

  ProjectionResult res;
  Eigen::VectorXd x = clamp(x0);
  double obj = objective_at(dict, W.W, z, x);

  for (int k = 0; k < opts.k_max; ++k) {
    Eigen::VectorXd p = dict.lift(x);
    Eigen::MatrixXd J = dict.jacobian(x);
    Eigen::VectorXd g = J.transpose() * (W.W * (p - z));
    Eigen::MatrixXd H = J.transpose() * W.W * J;

    // Pseudoinverse solve; singular values below 1e-12 * sigma_max dropped.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-12 * sv(0)) inv_sv(i) = 1.0 / sv(i);
    Eigen::VectorXd v = -(svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().transpose() * g));

    // Backtracking: halve the step while it increases the objective.
    Eigen::VectorXd x_next = clamp(x + v);
    double obj_next = objective_at(dict, W.W, z, x_next);
    int halvings = 0;
    while (obj_next > obj && halvings < opts.max_halvings) {
      v *= 0.5;
      x_next = clamp(x + v);
      obj_next = objective_at(dict, W.W, z, x_next);
      ++halvings;
    }

    double step_norm = v.norm();
    res.step_norms.push_back(step_norm);
    res.iterations = k + 1;
    x = std::move(x_next);
    obj = obj_next;
    if (step_norm <= opts.tol) {
      res.converged = true;
      break;
    }
  }

  res.x = x;
  res.z = dict.lift(x);
  res.objective = obj;
  return res;
}

namespace {

ProjectionResult brute_force_impl(const Dictionary& dict, const Eigen::MatrixXd& W,
                                  const Eigen::VectorXd& z, const Box& domain, int points_per_axis,
                                  bool parallel) {
  if (points_per_axis < 2)
    throw std::invalid_argument("brute_force_project: points_per_axis must be >= 2");
  const int d = dict.dim();
  if (domain.dim() != d) throw std::invalid_argument("brute_force_project: domain dimension mismatch");
  double total_d = std::pow(static_cast<double>(points_per_axis), d);
  if (total_d > 1e8)
    throw std::invalid_argument("brute_force_project: grid size " + std::to_string(total_d) +
                                " exceeds the 1e8 evaluation guard");
  const long long total = static_cast<long long>(total_d + 0.5);

  // Linear index decodes row-major: axis 0 varies slowest.
  auto grid_point = [&](long long idx) {
    Eigen::VectorXd x(d);
    for (int a = d - 1; a >= 0; --a) {
      long long i = idx % points_per_axis;
      idx /= points_per_axis;
      x[a] = domain.lo[a] +
             (domain.hi[a] - domain.lo[a]) * static_cast<double>(i) /
                 static_cast<double>(points_per_axis - 1);
    }
    return x;
  };

  struct Best {
    double obj = std::numeric_limits<double>::infinity();
    long long idx = -1;
  };
  Best best;

  if (parallel) {
#ifdef _OPENMP
    const int nthreads = omp_get_max_threads();
#else
    const int nthreads = 1;
#endif
    std::vector<Best> locals(static_cast<std::size_t>(nthreads));
#pragma omp parallel
    {
#ifdef _OPENMP
      const int tid = omp_get_thread_num();
#else
      const int tid = 0;
#endif
      Best local;
#pragma omp for schedule(static)
      for (long long idx = 0; idx < total; ++idx) {
        double obj = objective_at(dict, W, z, grid_point(idx));
        if (obj < local.obj || (obj == local.obj && idx < local.idx)) {
          local.obj = obj;
          local.idx = idx;
        }
      }
      locals[static_cast<std::size_t>(tid)] = local;
    }
    for (const auto& local : locals) {
      if (local.idx < 0) continue;
      if (local.obj < best.obj || (local.obj == best.obj && local.idx < best.idx)) best = local;
    }
  } else {
    for (long long idx = 0; idx < total; ++idx) {
      double obj = objective_at(dict, W, z, grid_point(idx));
      if (obj < best.obj) {
        best.obj = obj;
        best.idx = idx;
      }
    }
  }

  ProjectionResult res;
  res.x = grid_point(best.idx);
  res.z = dict.lift(res.x);
  res.iterations = 0;
  res.converged = true;
  res.objective = best.obj;
  return res;
}

}  // namespace

ProjectionResult brute_force_project(const Dictionary& dict, const Eigen::MatrixXd& W,
                                     const Eigen::VectorXd& z, const Box& domain,
                                     int points_per_axis) {
  return brute_force_impl(dict, W, z, domain, points_per_axis, true);
}

ProjectionResult brute_force_project_serial(const Dictionary& dict, const Eigen::MatrixXd& W,
                                            const Eigen::VectorXd& z, const Box& domain,
                                            int points_per_axis) {
  return brute_force_impl(dict, W, z, domain, points_per_axis, false);
}

WeightMatrix ml_weight(const CovarianceSurrogate& Q, const Eigen::VectorXd& p, double ridge) {
  Eigen::MatrixXd S = Q.quad(CovarianceSurrogate::augment(p));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (int i = 0; i < lambda.size(); ++i) {
    lambda[i] = std::max(lambda[i] + ridge, ridge);
    if (lambda[i] <= 0)
      throw std::invalid_argument("ml_weight: singular covariance; use a positive ridge");
  }
  WeightMatrix wm;
  wm.kind = WeightMatrix::Kind::inverse_covariance;
  wm.W = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  wm.W = 0.5 * (wm.W + wm.W.transpose()).eval();
  return wm;
}

}  // namespace koopman
