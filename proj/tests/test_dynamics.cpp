#include <cmath>

#include "doctest.h"
#include "koopman/dynamics.hpp"
#include "oracles.hpp"

using namespace koopman;

namespace {

Eigen::VectorXd v1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("combined_field on the builtin systems") {
  ParametricSystem pf = builtin_system(SystemName::pitchfork);
  CHECK(combined_field(pf, v1(0.0)).eval(v1(2.0))(0) == doctest::Approx(-8.0).epsilon(1e-15));
  CHECK(combined_field(pf, v1(1.0)).eval(v1(1.0))(0) == doctest::Approx(0.0).epsilon(1e-15));

  ParametricSystem lo = builtin_system(SystemName::lorenz);
  Eigen::Vector3d x(1.0, 1.0, 1.0);
  Eigen::VectorXd dx = combined_field(lo, v1(28.0)).eval(x);
  CHECK(dx(0) == doctest::Approx(0.0));
  CHECK(dx(1) == doctest::Approx(26.0));
  CHECK(dx(2) == doctest::Approx(-5.0 / 3.0));

  Eigen::VectorXd bad(2);
  bad << 1.0, 2.0;
  CHECK_THROWS_AS((void)combined_field(pf, bad), std::invalid_argument);
}

TEST_CASE("builtin system definitions") {
  ParametricSystem pf = builtin_system(SystemName::pitchfork);
  CHECK(pf.dim() == 1);
  CHECK(pf.param_count() == 1);
  CHECK(pf.drift.eval(v1(2.0))(0) == doctest::Approx(-8.0));
  CHECK(pf.state_domain.lo(0) == -2.0);
  CHECK(pf.state_domain.hi(0) == 2.0);

  ParametricSystem du = builtin_system(SystemName::duffing);
  Eigen::Vector2d xd(1.0, 0.0);
  double alpha = -1.5;
  Eigen::VectorXd f = du.drift.eval(xd) + alpha * du.inputs[0].eval(xd);
  CHECK(f(0) == doctest::Approx(0.0));
  CHECK(f(1) == doctest::Approx(-alpha - 1.0));

  ParametricSystem lo = builtin_system(SystemName::lorenz);
  CHECK(lo.state_domain.lo.isApprox(Eigen::Vector3d(-20, -20, 10)));
  CHECK(lo.state_domain.hi.isApprox(Eigen::Vector3d(20, 20, 50)));
  CHECK(lo.param_domain.lo(0) == 10.0);
  CHECK(lo.param_domain.hi(0) == 30.0);

  CHECK_THROWS(parse_system_name("vanderpol"));
}

TEST_CASE("parameter affinity holds to rounding") {
  for (SystemName name : {SystemName::pitchfork, SystemName::duffing, SystemName::lorenz}) {
    ParametricSystem sys = builtin_system(name);
    auto xs = sample_states(sys.state_domain, 5, 101);
    auto ps = sample_states(sys.param_domain, 5, 202);
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.param_count());
    for (const auto& x : xs) {
      Eigen::VectorXd base = combined_field(sys, zero).eval(x);
      for (const auto& p : ps) {
        Eigen::VectorXd expect = base;
        for (int i = 0; i < sys.param_count(); ++i) {
          Eigen::VectorXd ei = zero;
          ei(i) = 1.0;
          expect += p(i) * (combined_field(sys, ei).eval(x) - base);
        }
        CHECK((combined_field(sys, p).eval(x) - expect).norm() <=
              1e-12 * (1.0 + expect.norm()));
      }
    }
  }
}

TEST_CASE("integrate: analytic decay and identity at t = 0") {
  VectorField decay{1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; }};
  Eigen::VectorXd r = integrate(decay, v1(1.0), 1.0);
  CHECK(std::abs(r(0) - std::exp(-1.0)) < 1e-8);

  Eigen::VectorXd x0(1);
  x0 << 0.73;
  CHECK(integrate(decay, x0, 0.0) == x0);
}

TEST_CASE("integrate: pitchfork long-time limit against a fixed-step oracle") {
  ParametricSystem pf = builtin_system(SystemName::pitchfork);
  VectorField field = combined_field(pf, v1(1.0));
  Eigen::VectorXd r = integrate(field, v1(0.5), 10.0);
  CHECK(std::abs(r(0) - 1.0) < 1e-6);
  Eigen::VectorXd ref = oracles::rk4_fixed(field, v1(0.5), 10.0, 20000);
  CHECK(std::abs(r(0) - ref(0)) < 1e-8);
}

TEST_CASE("fixed-step order check: halving the step cuts the error by >= 12") {
  VectorField decay{1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -x; }};
  double exact = std::exp(-1.0);
  double e10 = std::abs(oracles::rk4_fixed(decay, v1(1.0), 1.0, 10)(0) - exact);
  double e20 = std::abs(oracles::rk4_fixed(decay, v1(1.0), 1.0, 20)(0) - exact);
  CHECK(e10 / e20 >= 12.0);
}

TEST_CASE("integrate: blow-up reports the time reached") {
  VectorField quad{1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
                     return x.array().square().matrix();
                   }};
  // x(t) = 1/(1-t) blows up at t = 1
  try {
    (void)integrate(quad, v1(1.0), 2.0);
    FAIL("expected IntegrationError");
  } catch (const IntegrationError& e) {
    CHECK(e.time_reached >= 0.0);
    CHECK(e.time_reached <= 1.01);
  }
}

TEST_CASE("pitchfork equilibria attract both branches") {
  ParametricSystem pf = builtin_system(SystemName::pitchfork);
  for (double p : {0.5, 1.0, 1.5}) {
    VectorField field = combined_field(pf, v1(p));
    double eq = std::sqrt(p);
    CHECK(std::abs(integrate(field, v1(1.8), 20.0)(0) - eq) < 1e-6);
    CHECK(std::abs(integrate(field, v1(0.1), 20.0)(0) - eq) < 1e-6);
    CHECK(std::abs(integrate(field, v1(-0.3), 20.0)(0) + eq) < 1e-6);
  }
}

TEST_CASE("lorenz nontrivial fixed points are stationary") {
  ParametricSystem lo = builtin_system(SystemName::lorenz);
  double beta = 8.0 / 3.0;
  for (double rho : {15.0, 28.0}) {
    double c = std::sqrt(beta * (rho - 1.0));
    for (double s : {1.0, -1.0}) {
      Eigen::Vector3d xf(s * c, s * c, rho - 1.0);
      CHECK(combined_field(lo, v1(rho)).eval(xf).norm() < 1e-12);
    }
  }
}

TEST_CASE("sample_states: containment, reproducibility, degenerate box") {
  Box unit(v1(0.0), v1(1.0));
  auto a = sample_states(unit, 3, 42);
  auto b = sample_states(unit, 3, 42);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(unit.contains(a[i]));
    CHECK(a[i] == b[i]);
  }
  CHECK(sample_states(unit, 3, 43)[0] != a[0]);

  Box wide(v1(-2.0), v1(2.0));
  auto big = sample_states(wide, 10000, 7);
  double mean = 0.0;
  for (const auto& x : big) mean += x(0);
  mean /= 10000.0;
  CHECK(std::abs(mean) < 0.1);

  Box degenerate(v1(0.5), v1(0.5));
  auto d = sample_states(degenerate, 1, 0);
  CHECK(d[0](0) == 0.5);
}

TEST_CASE("box helpers") {
  Box b(Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 2));
  CHECK(b.contains(Eigen::Vector2d(0, 1)));
  CHECK(!b.contains(Eigen::Vector2d(0, 3)));
  CHECK(b.clamp(Eigen::Vector2d(5, -5)).isApprox(Eigen::Vector2d(1, 0)));
  Box s = b.scaled_about_center(2.0);
  CHECK(s.lo.isApprox(Eigen::Vector2d(-2, -1)));
  CHECK(s.hi.isApprox(Eigen::Vector2d(2, 3)));
  Box infl = b.inflated(0.1);
  CHECK(infl.lo(0) == doctest::Approx(-1.1));
  CHECK_THROWS_AS(Box(v1(1.0), v1(0.0)), std::invalid_argument);
}
