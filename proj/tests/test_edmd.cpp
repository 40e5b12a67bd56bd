#include <cmath>

#include "doctest.h"
#include "koopman/batch.hpp"
#include "koopman/edmd.hpp"
#include "oracles.hpp"

using namespace koopman;

namespace {

Eigen::VectorXd v1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

SnapshotSet pitchfork_data(int n, std::uint64_t seed) {
  SnapshotOptions opts;
  opts.n = n;
  opts.seed = seed;
  opts.t = 0.1;
  return generate_snapshots(builtin_system(SystemName::pitchfork), opts);
}

double training_objective(const KoopmanModel& model, const SnapshotSet& data) {
  double obj = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    Eigen::VectorXd p = data.parametric() ? data.params[j] : Eigen::VectorXd(0);
    Eigen::VectorXd r =
        model.dict.lift(data.successors[j]) - model.apply(p, model.dict.lift(data.states[j]));
    obj += r.squaredNorm();
  }
  return obj;
}

}  // namespace

TEST_CASE("scalar least squares: single snapshot, single feature") {
  Dictionary dict(1, 1, {{0}});  // basis = {x}
  REQUIRE(dict.size() == 1);
  SnapshotSet data;
  data.t = 1.0;
  data.states.push_back(v1(2.0));
  data.successors.push_back(v1(4.0));
  KoopmanModel model = fit_autonomous(dict, data);
  REQUIRE(model.blocks.size() == 1);
  CHECK(model.blocks[0](0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("apply: linearity in p") {
  KoopmanModel model;
  model.dict = Dictionary(2, 1);
  model.m = 1;
  int M = model.dict.size();
  model.blocks = {Eigen::MatrixXd::Identity(M, M), Eigen::MatrixXd::Identity(M, M)};
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(M, 1.0, 3.0);

  CHECK(model.apply(v1(2.0), z) == 3.0 * z);
  CHECK(model.apply(v1(0.0), z) == z);

  Eigen::VectorXd lhs = model.apply(v1(0.3), z) + model.apply(v1(1.1), z) - model.apply(v1(0.0), z);
  CHECK((lhs - model.apply(v1(1.4), z)).norm() <= 1e-14 * z.norm());
}

TEST_CASE("koopman-invariant exactness for a linear system") {
  oracles::SpiralSystem spiral;
  Dictionary dict(2, 3);
  SnapshotSet train = spiral.exact_snapshots(600, 0.3, 11);
  KoopmanModel model = fit_autonomous(dict, train);

  auto held_out = sample_states(spiral.as_parametric().state_domain, 100, 99);
  for (const auto& x : held_out) {
    Eigen::VectorXd truth = dict.lift(spiral.flow(x, 0.3));
    CHECK((truth - model.apply(Eigen::VectorXd(0), dict.lift(x))).norm() <= 1e-6);
  }
}

TEST_CASE("m = 0 parametric fit equals the autonomous fit") {
  oracles::SpiralSystem spiral;
  Dictionary dict(2, 2);
  SnapshotSet data = spiral.exact_snapshots(300, 0.2, 5);
  KoopmanModel aut = fit_autonomous(dict, data);

  SnapshotSet with_empty = data;
  with_empty.params.assign(data.size(), Eigen::VectorXd(0));
  KoopmanModel par = fit_parametric(dict, with_empty);

  REQUIRE(par.m == 0);
  REQUIRE(par.blocks.size() == 1);
  CHECK((par.blocks[0] - aut.blocks[0]).norm() <= 1e-12 * (1.0 + aut.blocks[0].norm()));
}

TEST_CASE("fixed-parameter data: parametric and autonomous fits predict alike") {
  const double p_star = 0.7;
  ParametricSystem pf = builtin_system(SystemName::pitchfork);
  Dictionary dict(1, 5);

  auto states = sample_states(pf.state_domain, 800, 21);
  SnapshotSet data;
  data.t = 0.1;
  data.states = states;
  data.params.assign(states.size(), v1(p_star));
  data.successors = integrate_batch(pf, states, data.params, 0.1, 1e-8, 1e-10);

  // With a fixed parameter the augmented features are collinear, so the ridge
  // penalties must be matched: lambda_aut = lambda_par / |pbar|^2.
  double lam = 1e-10;
  FitOptions par_opts, aut_opts;
  par_opts.ridge = lam;
  aut_opts.ridge = lam / (1.0 + p_star * p_star);
  KoopmanModel par = fit_parametric(dict, data, par_opts);

  SnapshotSet plain = data;
  plain.params.clear();
  KoopmanModel aut = fit_autonomous(dict, plain, aut_opts);

  Eigen::MatrixXd K_eff = par.combine(v1(p_star));
  for (const auto& x : sample_states(pf.state_domain, 50, 77)) {
    Eigen::VectorXd z = dict.lift(x);
    CHECK((K_eff * z - aut.blocks[0] * z).norm() <= 1e-8 * (1.0 + z.norm()));
  }
}

TEST_CASE("pitchfork one-step held-out state RMS below 1e-2") {
  Dictionary dict(1, 5);
  SnapshotSet train = pitchfork_data(5000, 0);
  KoopmanModel model = fit_parametric(dict, train);

  SnapshotSet test = pitchfork_data(500, 1234);
  double sq = 0.0;
  for (std::size_t j = 0; j < test.size(); ++j) {
    Eigen::VectorXd z1 = model.apply(test.params[j], dict.lift(test.states[j]));
    double xhat = dict.invert_on_manifold(z1)(0);
    double err = xhat - test.successors[j](0);
    sq += err * err;
  }
  CHECK(std::sqrt(sq / test.size()) < 1e-2);
}

TEST_CASE("duplicating the entire data set leaves the fit unchanged") {
  Dictionary dict(1, 5);
  SnapshotSet data = pitchfork_data(600, 8);
  KoopmanModel one = fit_parametric(dict, data);

  SnapshotSet twice = data;
  twice.states.insert(twice.states.end(), data.states.begin(), data.states.end());
  twice.params.insert(twice.params.end(), data.params.begin(), data.params.end());
  twice.successors.insert(twice.successors.end(), data.successors.begin(), data.successors.end());
  KoopmanModel two = fit_parametric(dict, twice);

  for (std::size_t b = 0; b < one.blocks.size(); ++b)
    CHECK((one.blocks[b] - two.blocks[b]).norm() <= 1e-8 * (1.0 + one.blocks[b].norm()));
}

TEST_CASE("residual orthogonality to the regression features at ridge = 0") {
  Dictionary dict(1, 5);
  SnapshotSet data = pitchfork_data(2000, 4);
  KoopmanModel model = fit_parametric(dict, data);

  int M = dict.size();
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(M, 2 * M);
  double scale = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    Eigen::VectorXd z = dict.lift(data.states[j]);
    Eigen::VectorXd feat(2 * M);
    feat << z, data.params[j](0) * z;
    Eigen::VectorXd r = dict.lift(data.successors[j]) - model.apply(data.params[j], z);
    cross += r * feat.transpose();
    scale += dict.lift(data.successors[j]).norm() * feat.norm();
  }
  CHECK(cross.norm() <= 1e-8 * scale);
}

TEST_CASE("first-order optimality: entry perturbations do not reduce the objective") {
  Dictionary dict(1, 3);
  SnapshotSet data = pitchfork_data(400, 13);
  KoopmanModel model = fit_parametric(dict, data);
  double base = training_objective(model, data);

  for (int b = 0; b < 2; ++b) {
    for (int idx : {0, 3, 7}) {
      for (double eps : {1e-4, -1e-4}) {
        KoopmanModel pert = model;
        pert.blocks[static_cast<std::size_t>(b)](idx / dict.size(), idx % dict.size()) += eps;
        CHECK(training_objective(pert, data) >= base - 1e-10 * (1.0 + base));
      }
    }
  }
}

TEST_CASE("convergence in data toward a high-sample reference") {
  Dictionary dict(1, 3);
  KoopmanModel ref = fit_parametric(dict, pitchfork_data(20000, 999));
  auto dist = [&](const KoopmanModel& m) {
    double s = 0.0;
    for (std::size_t b = 0; b < m.blocks.size(); ++b)
      s += (m.blocks[b] - ref.blocks[b]).squaredNorm();
    return std::sqrt(s);
  };

  std::vector<double> small, large;
  for (std::uint64_t seed : {31, 32, 33, 34, 35}) {
    small.push_back(dist(fit_parametric(dict, pitchfork_data(500, seed))));
    large.push_back(dist(fit_parametric(dict, pitchfork_data(1000, seed + 100))));
  }
  std::sort(small.begin(), small.end());
  std::sort(large.begin(), large.end());
  CHECK(large[2] < small[2]);  // medians
}

TEST_CASE("rank-deficient data raises a singularity error when fallback is off") {
  Dictionary dict(1, 5);
  SnapshotSet data = pitchfork_data(3, 2);  // 3 samples, 12 augmented features
  FitOptions opts;
  opts.auto_ridge_fallback = false;
  CHECK_THROWS_AS((void)fit_parametric(dict, data, opts), SingularGramError);

  FitDiagnostics diag;
  KoopmanModel model = fit_parametric(dict, data, FitOptions{}, &diag);
  CHECK(diag.ridge_used > 0.0);  // automatic fallback engaged
  CHECK(model.blocks.size() == 2);
}

TEST_CASE("fit diagnostics are populated") {
  Dictionary dict(1, 5);
  FitDiagnostics diag;
  (void)fit_parametric(dict, pitchfork_data(500, 6), FitOptions{}, &diag);
  CHECK(diag.residual_rms > 0.0);
  CHECK(diag.residual_rms < 0.1);
  CHECK(diag.smallest_singular > 0.0);
  CHECK(diag.condition_number >= 1.0);
}
