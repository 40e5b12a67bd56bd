#include "koopman/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "koopman/rng.hpp"

namespace koopman {

Box::Box(Eigen::VectorXd l, Eigen::VectorXd h) : lo(std::move(l)), hi(std::move(h)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
  for (int i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("Box: lo > hi on axis " + std::to_string(i));
}

bool Box::contains(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) return false;
  for (int i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

Eigen::VectorXd Box::clamp(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = x;
  for (int i = 0; i < lo.size(); ++i) out[i] = std::clamp(out[i], lo[i], hi[i]);
  return out;
}

Box Box::scaled_about_center(double factor) const {
  Eigen::VectorXd center = 0.5 * (lo + hi);
  Eigen::VectorXd half = 0.5 * factor * (hi - lo);
  return Box(center - half, center + half);
}

VectorField combined_field(const ParametricSystem& sys, const Eigen::VectorXd& p) {
  if (p.size() != sys.param_count())
    throw std::invalid_argument("combined_field: parameter dimension " +
                                std::to_string(p.size()) + " != " +
                                std::to_string(sys.param_count()));
  VectorField out;
  out.dim = sys.dim();
  out.eval = [drift = sys.drift, inputs = sys.inputs, p](const Eigen::VectorXd& x) {
    Eigen::VectorXd dx = drift.eval(x);
    for (std::size_t i = 0; i < inputs.size(); ++i) dx += p[static_cast<int>(i)] * inputs[i].eval(x);
    return dx;
  };
  return out;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

}  // namespace

Eigen::VectorXd integrate(const VectorField& field, const Eigen::VectorXd& x0, double t,
                          double rel_tol, double abs_tol) {
  if (t < 0) throw std::invalid_argument("integrate: t must be nonnegative");
  if (rel_tol <= 0 || abs_tol <= 0) throw std::invalid_argument("integrate: tolerances must be positive");
  if (x0.size() != field.dim) throw std::invalid_argument("integrate: state dimension mismatch");
  if (t == 0) return x0;

  const double h_min = 1e-14 * std::max(1.0, t);
  Eigen::VectorXd x = x0;
  double time = 0.0;
  double h = std::min(t, 1e-2 * std::max(t, 1.0));
  Eigen::VectorXd k1 = field.eval(x);

  while (time < t) {
    h = std::min(h, t - time);
    Eigen::VectorXd k2 = field.eval(x + h * (a21 * k1));
    Eigen::VectorXd k3 = field.eval(x + h * (a31 * k1 + a32 * k2));
    Eigen::VectorXd k4 = field.eval(x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Eigen::VectorXd k5 = field.eval(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Eigen::VectorXd k6 =
        field.eval(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Eigen::VectorXd x5 = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Eigen::VectorXd k7 = field.eval(x5);  // FSAL
    Eigen::VectorXd x4 = x + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    // Scaled error norm.
    double err = 0.0;
    for (int i = 0; i < x.size(); ++i) {
      double scale = abs_tol + rel_tol * std::max(std::abs(x[i]), std::abs(x5[i]));
      double e = (x5[i] - x4[i]) / scale;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(x.size()));

    if (!std::isfinite(err)) {
      throw IntegrationError("integrate: non-finite state at t = " + std::to_string(time), time);
    }

    if (err <= 1.0) {
      time += h;
      x = std::move(x5);
      k1 = std::move(k7);
    }
    double factor = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    if (h < h_min && time < t) {
      throw IntegrationError("integrate: step size underflow at t = " + std::to_string(time), time);
    }
  }
  return x;
}

std::vector<Eigen::VectorXd> sample_states(const Box& domain, int n, std::uint64_t seed,
                                           std::uint64_t counter_offset) {
  if (n < 1) throw std::invalid_argument("sample_states: n must be >= 1");
  const int d = domain.dim();
  std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x(d);
    for (int a = 0; a < d; ++a) {
      std::uint64_t counter =
          counter_offset + static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(d) +
          static_cast<std::uint64_t>(a);
      x[a] = rng::uniform(seed, counter, domain.lo[a], domain.hi[a]);
    }
    out[static_cast<std::size_t>(i)] = std::move(x);
  }
  return out;
}

SystemName parse_system_name(const std::string& name) {
  if (name == "pitchfork") return SystemName::pitchfork;
  if (name == "duffing") return SystemName::duffing;
  if (name == "lorenz") return SystemName::lorenz;
  throw std::invalid_argument("unknown system name: " + name);
}

std::string to_string(SystemName name) {
  switch (name) {
    case SystemName::pitchfork: return "pitchfork";
    case SystemName::duffing: return "duffing";
    case SystemName::lorenz: return "lorenz";
  }
  throw std::logic_error("unreachable");
}

ParametricSystem builtin_system(SystemName name) {
  ParametricSystem sys;
  switch (name) {
    case SystemName::pitchfork: {
      sys.drift = {1, [](const Eigen::VectorXd& x) {
                     Eigen::VectorXd dx(1);
                     dx[0] = -x[0] * x[0] * x[0];
                     return dx;
                   }};
      sys.inputs = {{1, [](const Eigen::VectorXd& x) {
                       Eigen::VectorXd dx(1);
                       dx[0] = x[0];
                       return dx;
                     }}};
      sys.state_domain = Box(Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0));
      sys.param_domain = Box(Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0));
      break;
    }
    case SystemName::duffing: {
      // Undamped (delta = 0), beta = 1; stiffness alpha is the parameter.
      sys.drift = {2, [](const Eigen::VectorXd& x) {
                     Eigen::VectorXd dx(2);
                     dx[0] = x[1];
                     dx[1] = -x[0] * x[0] * x[0];
                     return dx;
                   }};
      sys.inputs = {{2, [](const Eigen::VectorXd& x) {
                       Eigen::VectorXd dx(2);
                       dx[0] = 0.0;
                       dx[1] = -x[0];
                       return dx;
                     }}};
      sys.state_domain = Box(Eigen::VectorXd::Constant(2, -2.0), Eigen::VectorXd::Constant(2, 2.0));
      sys.param_domain = Box(Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0));
      break;
    }
    case SystemName::lorenz: {
      // rho enters affinely through g1 = (0, x1, 0):
      // x1(rho - x3) - x2 = (-x1 x3 - x2) + rho * x1.
      const double sigma = 10.0, beta = 8.0 / 3.0;
      sys.drift = {3, [sigma, beta](const Eigen::VectorXd& x) {
                     Eigen::VectorXd dx(3);
                     dx[0] = sigma * (x[1] - x[0]);
                     dx[1] = -x[0] * x[2] - x[1];
                     dx[2] = x[0] * x[1] - beta * x[2];
                     return dx;
                   }};
      sys.inputs = {{3, [](const Eigen::VectorXd& x) {
                       Eigen::VectorXd dx(3);
                       dx[0] = 0.0;
                       dx[1] = x[0];
                       dx[2] = 0.0;
                       return dx;
                     }}};
      Eigen::VectorXd lo(3), hi(3);
      lo << -20.0, -20.0, 10.0;
      hi << 20.0, 20.0, 50.0;
      sys.state_domain = Box(lo, hi);
      sys.param_domain = Box(Eigen::VectorXd::Constant(1, 10.0), Eigen::VectorXd::Constant(1, 30.0));
      break;
    }
  }
  return sys;
}

}  // namespace koopman
