#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "koopman/model_io.hpp"
#include "koopman/prediction.hpp"

namespace koopman {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment configuration; every field has a default so a run is fully
/// described by its echoed config.
struct RunConfig {
  int schema_version = 1;
  std::string system = "pitchfork";
  int degree = 5;
  std::vector<MultiIndex> exclude;
  double t = 0.1;
  int n_samples = 5000;
  std::uint64_t seed = 0;
  std::string sampling = "iid";  // "iid" | "trajectory"
  int trajectory_length = 10;
  double ridge = 0.0;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;

  std::vector<Eigen::VectorXd> params;          // predict / multistep / newton-bench
  std::vector<Eigen::VectorXd> initial_states;  // predict / simulate
  int n_steps = 100;
  std::vector<PredictorConfig> predictors;

  std::vector<double> bifurcation_params;
  int grid_points = 401;

  std::vector<double> trigger_factors = {10.0, 100.0, 1000.0};
  TriggerMeasure trigger_measure = TriggerMeasure::trace;
  int trigger_diag_index = 0;

  int bench_every = 20;
};

RunConfig load_config(const std::string& path);
RunConfig config_from_json_text(const std::string& text);
/// Config with all defaults materialized, serialized canonically.
std::string echo_config(const RunConfig& cfg);
std::string config_hash(const RunConfig& cfg);

struct FitResult {
  KoopmanModel model;
  CovarianceSurrogate covariance;
  FitDiagnostics diagnostics;
};

/// Samples data, fits the Koopman blocks and the covariance surrogate.
FitResult run_fit(const RunConfig& cfg);

/// fit + model file + echoed config in out_dir. Returns the model path.
std::string cmd_fit(const RunConfig& cfg, const std::string& out_dir);

/// Traces for every (predictor, p, x0) combination plus summary.json.
/// Returns the number of failed runs (batch continues past failures).
int cmd_predict(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir);

/// One-step return maps on a state grid for each parameter (d = 1 only).
void cmd_bifurcation(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir);

/// Newton step-norm sequences at every bench_every-th prediction step.
void cmd_newton_bench(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir);

/// Adaptive predictor across the configured trigger factors; summary reports
/// realized reprojection intervals per factor.
void cmd_multistep(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir);

/// Ground truth trajectories only.
void cmd_simulate(const RunConfig& cfg, const std::string& out_dir);

/// Reprojection intervals (step counts between consecutive reprojections).
std::vector<int> reprojection_intervals(const PredictionTrace& trace);

}  // namespace koopman
