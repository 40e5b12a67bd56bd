#include "koopman/batch.hpp"

#include <stdexcept>
#include <string>

namespace koopman {

void SnapshotSet::validate() const {
  if (states.size() != successors.size())
    throw std::invalid_argument("SnapshotSet: states/successors length mismatch");
  if (!params.empty() && params.size() != states.size())
    throw std::invalid_argument("SnapshotSet: params length mismatch");
  if (t <= 0) throw std::invalid_argument("SnapshotSet: t must be positive");
  for (std::size_t j = 1; j < states.size(); ++j) {
    if (states[j].size() != states[0].size() || successors[j].size() != states[0].size())
      throw std::invalid_argument("SnapshotSet: inconsistent state dimension at row " +
                                  std::to_string(j));
  }
}

Eigen::MatrixXd lift_batch_serial(const Dictionary& dict,
                                  const std::vector<Eigen::VectorXd>& states) {
  const int n = static_cast<int>(states.size());
  Eigen::MatrixXd Z(dict.size(), n);
  for (int j = 0; j < n; ++j) Z.col(j) = dict.lift(states[static_cast<std::size_t>(j)]);
  return Z;
}

Eigen::MatrixXd lift_batch(const Dictionary& dict, const std::vector<Eigen::VectorXd>& states) {
  const int n = static_cast<int>(states.size());
  Eigen::MatrixXd Z(dict.size(), n);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) Z.col(j) = dict.lift(states[static_cast<std::size_t>(j)]);
  return Z;
}

std::vector<Eigen::VectorXd> integrate_batch_serial(const ParametricSystem& sys,
                                                    const std::vector<Eigen::VectorXd>& states,
                                                    const std::vector<Eigen::VectorXd>& params,
                                                    double t, double rel_tol, double abs_tol) {
  const int n = static_cast<int>(states.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.param_count());
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd& p = params.empty() ? zero : params[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(j)] =
        integrate(combined_field(sys, p), states[static_cast<std::size_t>(j)], t, rel_tol, abs_tol);
  }
  return out;
}

std::vector<Eigen::VectorXd> integrate_batch(const ParametricSystem& sys,
                                             const std::vector<Eigen::VectorXd>& states,
                                             const std::vector<Eigen::VectorXd>& params, double t,
                                             double rel_tol, double abs_tol) {
  const int n = static_cast<int>(states.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.param_count());
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64)
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd& p = params.empty() ? zero : params[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(j)] =
        integrate(combined_field(sys, p), states[static_cast<std::size_t>(j)], t, rel_tol, abs_tol);
  }
  return out;
}

namespace {

SnapshotSet generate_impl(const ParametricSystem& sys, const SnapshotOptions& opts, bool parallel) {
  if (opts.n < 1) throw std::invalid_argument("generate_snapshots: n must be >= 1");
  const int d = sys.dim();
  const int m = sys.param_count();
  SnapshotSet data;
  data.t = opts.t;

  if (opts.sampling == SamplingMode::iid) {
    data.states = sample_states(sys.state_domain, opts.n, opts.seed);
    if (opts.sample_params && m > 0) {
      const std::uint64_t offset =
          static_cast<std::uint64_t>(opts.n) * static_cast<std::uint64_t>(d);
      data.params = sample_states(sys.param_domain, opts.n, opts.seed, offset);
    }
    data.successors = parallel
                          ? integrate_batch(sys, data.states, data.params, opts.t, opts.rel_tol,
                                            opts.abs_tol)
                          : integrate_batch_serial(sys, data.states, data.params, opts.t,
                                                   opts.rel_tol, opts.abs_tol);
  } else {
    const int len = std::max(1, opts.trajectory_length);
    const int rollouts = (opts.n + len - 1) / len;
    std::vector<Eigen::VectorXd> starts = sample_states(sys.state_domain, rollouts, opts.seed);
    std::vector<Eigen::VectorXd> ps;
    if (opts.sample_params && m > 0) {
      const std::uint64_t offset =
          static_cast<std::uint64_t>(rollouts) * static_cast<std::uint64_t>(d);
      ps = sample_states(sys.param_domain, rollouts, opts.seed, offset);
    }
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
    std::vector<std::vector<Eigen::VectorXd>> paths(static_cast<std::size_t>(rollouts));
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int r = 0; r < rollouts; ++r) {
      const Eigen::VectorXd& p = ps.empty() ? zero : ps[static_cast<std::size_t>(r)];
      VectorField field = combined_field(sys, p);
      std::vector<Eigen::VectorXd> path;
      path.reserve(static_cast<std::size_t>(len) + 1);
      path.push_back(starts[static_cast<std::size_t>(r)]);
      for (int k = 0; k < len; ++k)
        path.push_back(integrate(field, path.back(), opts.t, opts.rel_tol, opts.abs_tol));
      paths[static_cast<std::size_t>(r)] = std::move(path);
    }
    for (int r = 0; r < rollouts && static_cast<int>(data.states.size()) < opts.n; ++r) {
      const auto& path = paths[static_cast<std::size_t>(r)];
      for (int k = 0; k < len && static_cast<int>(data.states.size()) < opts.n; ++k) {
        data.states.push_back(path[static_cast<std::size_t>(k)]);
        data.successors.push_back(path[static_cast<std::size_t>(k) + 1]);
        if (!ps.empty()) data.params.push_back(ps[static_cast<std::size_t>(r)]);
      }
    }
  }
  data.validate();
  return data;
}

}  // namespace

SnapshotSet generate_snapshots(const ParametricSystem& sys, const SnapshotOptions& opts) {
  return generate_impl(sys, opts, true);
}

SnapshotSet generate_snapshots_serial(const ParametricSystem& sys, const SnapshotOptions& opts) {
  return generate_impl(sys, opts, false);
}

}  // namespace koopman
