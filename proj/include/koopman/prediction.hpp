#pragma once

#include <Eigen/Dense>
#include <vector>

#include "koopman/covariance.hpp"
#include "koopman/edmd.hpp"
#include "koopman/reprojection.hpp"

namespace koopman {

enum class PredictorMode { standard, coordinate, max_likelihood };
enum class Schedule { every_step, adaptive };
enum class TriggerMeasure { trace, diag_entry };

PredictorMode parse_predictor_mode(const std::string& s);
std::string to_string(PredictorMode m);

struct PredictorConfig {
  PredictorMode mode = PredictorMode::standard;
  Schedule schedule = Schedule::every_step;
  TriggerMeasure measure = TriggerMeasure::trace;
  int diag_index = 0;
  double trigger_factor = 10.0;   // > 1
  double ridge = -1.0;            // < 0 => 1e-10 * trace(Sigma)/M
  double newton_tol = 1e-8;
  int newton_k_max = 50;
};

struct StepRecord {
  Eigen::VectorXd z;
  Eigen::VectorXd x;        // empty when no state readout is available
  bool has_state = false;
  double cov_measure = 0.0; // scaled trigger measure (adaptive schedule only)
  bool reprojected = false;
  int newton_iterations = 0;
  bool newton_converged = true;
  std::vector<double> newton_step_norms;
};

struct PredictionTrace {
  std::vector<StepRecord> steps;  // n_steps + 1 entries, step 0 included
  Eigen::VectorXd x0;
  Eigen::VectorXd p;
  double t = 0.0;
  int n_steps = 0;
  PredictorConfig config;
};

/// trace(Sigma) or Sigma[i, i].
double trigger_measure_value(const Eigen::MatrixXd& sigma, TriggerMeasure measure,
                             int diag_index = 0);

/// Multistep prediction of the lifted recurrence z+ = (K_0 + sum p_i K_i) z.
///   standard:       no reprojection; states read off the witness entries for
///                   display only (flagged unavailable without witnesses).
///   coordinate:     z <- Psi(witness readout) after every step.
///   max_likelihood: z <- Psi(newton_project(., ml_weight(Q, p), z, warm)) after
///                   each step (warm start: previous reprojected state).
/// Adaptive schedule: Sigma is propagated from 0, reprojection fires when
/// measure(Sigma) exceeds trigger_factor * measure(Q(pbar,pbar)) (both in
/// scaled feature coordinates), and Sigma resets to 0 afterwards.
PredictionTrace predict(const KoopmanModel& model, const CovarianceSurrogate* Q,
                        const PredictorConfig& config, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& p, int n_steps);

struct ErrorSeries {
  std::vector<double> errors;  // per step; state error, or lifted when no state
  std::vector<bool> lifted;    // true where the entry is a lifted-space error
  bool truncated = false;
  int truncated_at = -1;
};

/// Per-step errors against ground truth from the adaptive integrator. Steps
/// without a state readout are compared in lifted space when a dictionary is
/// supplied (entry flagged in `lifted`).
ErrorSeries compare_to_truth(const PredictionTrace& trace, const ParametricSystem& sys,
                             const Dictionary* dict = nullptr, double rel_tol = 1e-8,
                             double abs_tol = 1e-10);

}  // namespace koopman
