#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace koopman {

/// Autonomous vector field on R^d. eval must be deterministic.
struct VectorField {
  int dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
};

/// Axis-aligned box, lo <= hi componentwise. Degenerate axes (lo == hi) allowed.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd l, Eigen::VectorXd h);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
  /// Box scaled about its center; factor 1 is the identity.
  Box scaled_about_center(double factor) const;
  /// Box with each half-width enlarged by the given fraction (0.1 = 10%).
  Box inflated(double fraction) const { return scaled_about_center(1.0 + fraction); }
};

/// Parameter-affine system xdot = f(x) + sum_i p_i g_i(x).
struct ParametricSystem {
  VectorField drift;                  // f
  std::vector<VectorField> inputs;    // g_1..g_m
  Box state_domain;                   // X
  Box param_domain;                   // L

  int dim() const { return drift.dim; }
  int param_count() const { return static_cast<int>(inputs.size()); }
};

/// The frozen-parameter field x |-> f(x) + sum_i p_i g_i(x).
VectorField combined_field(const ParametricSystem& sys, const Eigen::VectorXd& p);

struct IntegrationError : std::runtime_error {
  double time_reached;
  IntegrationError(const std::string& what, double t_reached)
      : std::runtime_error(what), time_reached(t_reached) {}
};

/// Flow map Fl^t(x0) via the embedded Dormand-Prince 4(5) pair with adaptive
/// step-size control. t = 0 returns x0 exactly. Throws IntegrationError on
/// step-size underflow, reporting the time reached.
Eigen::VectorXd integrate(const VectorField& field, const Eigen::VectorXd& x0, double t,
                          double rel_tol = 1e-8, double abs_tol = 1e-10);

/// n i.i.d. uniform points on the box. Point i, axis a draws from the
/// SplitMix64 counter stream at counter i*dim + a, so generation is
/// order-independent and reproducible for a fixed seed.
std::vector<Eigen::VectorXd> sample_states(const Box& domain, int n, std::uint64_t seed,
                                           std::uint64_t counter_offset = 0);

enum class SystemName { pitchfork, duffing, lorenz };

SystemName parse_system_name(const std::string& name);
std::string to_string(SystemName name);

/// The three benchmark systems.
///   pitchfork: d=1, f = -x^3, g1 = x, X = L = [-2,2].
///   duffing:   d=2, f = (x2, -x1^3), g1 = (0, -x1), X = [-2,2]^2, L = [-2,2].
///   lorenz:    d=3, sigma=10, beta=8/3, rho affine via g1 = (0, x1, 0),
///              X = [-20,20]^2 x [10,50], L = [10,30].
ParametricSystem builtin_system(SystemName name);

}  // namespace koopman
