#include "koopman/prediction.hpp"

#include <cmath>
#include <stdexcept>

#include "koopman/log.hpp"

namespace koopman {

PredictorMode parse_predictor_mode(const std::string& s) {
  if (s == "standard") return PredictorMode::standard;
  if (s == "coordinate") return PredictorMode::coordinate;
  if (s == "max_likelihood") return PredictorMode::max_likelihood;
  throw std::invalid_argument("unknown predictor mode: " + s);
}

std::string to_string(PredictorMode m) {
  switch (m) {
    case PredictorMode::standard: return "standard";
    case PredictorMode::coordinate: return "coordinate";
    case PredictorMode::max_likelihood: return "max_likelihood";
  }
  throw std::logic_error("unreachable");
}

double trigger_measure_value(const Eigen::MatrixXd& sigma, TriggerMeasure measure, int diag_index) {
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("trigger_measure_value: not square");
  switch (measure) {
    case TriggerMeasure::trace: return sigma.trace();
    case TriggerMeasure::diag_entry:
      if (diag_index < 0 || diag_index >= sigma.rows())
        throw std::out_of_range("trigger_measure_value: diagonal index out of range");
      return sigma(diag_index, diag_index);
  }
  throw std::logic_error("unreachable");
}

PredictionTrace predict(const KoopmanModel& model, const CovarianceSurrogate* Q,
                        const PredictorConfig& config, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& p, int n_steps) {
  if (n_steps < 0) throw std::invalid_argument("predict: n_steps must be nonnegative");
  if (p.size() != model.m) throw std::invalid_argument("predict: parameter dimension mismatch");
  const bool adaptive = config.schedule == Schedule::adaptive;
  const bool needs_q = config.mode == PredictorMode::max_likelihood || adaptive;
  if (needs_q && !Q)
    throw std::invalid_argument("predict: this configuration requires a covariance surrogate");
  if (adaptive && !(config.trigger_factor > 1.0))
    throw std::invalid_argument("predict: trigger_factor must exceed 1");

  const Dictionary& dict = model.dict;
  const int M = model.lifted_dim();
  const Eigen::MatrixXd K = model.combine(p);
  const Eigen::VectorXd pbar = CovarianceSurrogate::augment(p);
  const bool witnesses = dict.has_witnesses();

  // ML weight is fixed along the trajectory (p is constant).
  WeightMatrix W;
  if (config.mode == PredictorMode::max_likelihood) {
    double ridge = config.ridge;
    if (ridge < 0) {
      ridge = 1e-10 * std::abs(Q->quad(pbar).trace()) / static_cast<double>(M);
      if (ridge == 0) ridge = 1e-14;
    }
    W = ml_weight(*Q, p, ridge);
  }

  NewtonOptions nopts;
  nopts.tol = config.newton_tol;
  nopts.k_max = config.newton_k_max;
  if (model.state_domain.dim() == dict.dim()) nopts.domain = model.state_domain;

  // Trigger bookkeeping. Measures are evaluated in scaled feature coordinates
  // D^{-1} Sigma D^{-1}, D = diag(feature_scale).
  Eigen::VectorXd inv_scale;
  Eigen::MatrixXd q_base, sigma;
  double baseline = 0.0;
  if (adaptive) {
    inv_scale = (model.feature_scale.size() == M)
                    ? Eigen::VectorXd(model.feature_scale.cwiseInverse())
                    : Eigen::VectorXd(Eigen::VectorXd::Ones(M));
    q_base = Q->quad(pbar);
    Eigen::MatrixXd q_scaled = inv_scale.asDiagonal() * q_base * inv_scale.asDiagonal();
    baseline = trigger_measure_value(q_scaled, config.measure, config.diag_index);
    sigma = Eigen::MatrixXd::Zero(M, M);
  }

  PredictionTrace trace;
  trace.x0 = x0;
  trace.p = p;
  trace.t = model.t;
  trace.n_steps = n_steps;
  trace.config = config;
  trace.steps.reserve(static_cast<std::size_t>(n_steps) + 1);

  Eigen::VectorXd z = dict.lift(x0);
  Eigen::VectorXd x_prev = x0;  // Newton warm start

  StepRecord first;
  first.z = z;
  first.x = x0;
  first.has_state = true;
  trace.steps.push_back(std::move(first));

  auto readout = [&](StepRecord& rec) {
    rec.z = z;
    if (witnesses) {
      rec.x = dict.invert_on_manifold(z);
      rec.has_state = true;
    }
  };

  for (int k = 1; k <= n_steps; ++k) {
    z = K * z;
    StepRecord rec;

    if (config.mode == PredictorMode::standard) {
      readout(rec);
      trace.steps.push_back(std::move(rec));
      continue;
    }

    bool reproject_now = true;
    if (adaptive) {
      Eigen::MatrixXd propagated = q_base + K * sigma * K.transpose();
      sigma = 0.5 * (propagated + propagated.transpose());
      Eigen::MatrixXd sigma_scaled = inv_scale.asDiagonal() * sigma * inv_scale.asDiagonal();
      rec.cov_measure = trigger_measure_value(sigma_scaled, config.measure, config.diag_index);
      reproject_now = rec.cov_measure > config.trigger_factor * baseline;
    }

    if (reproject_now) {
      if (config.mode == PredictorMode::coordinate) {
        ProjectionResult pr = coordinate_project(dict, z);
        rec.x = pr.x;
        rec.z = pr.z;
      } else {
        ProjectionResult pr = newton_project(dict, W, z, x_prev, nopts);
        rec.newton_iterations = pr.iterations;
        rec.newton_converged = pr.converged;
        rec.newton_step_norms = pr.step_norms;
        if (!pr.converged && witnesses) {
          KOOPMAN_LOG_DEBUG("predict: Newton did not converge at step %d, coordinate fallback", k);
          pr = coordinate_project(dict, z);
        }
        rec.x = pr.x;
        rec.z = pr.z;
      }
      rec.has_state = true;
      rec.reprojected = true;
      x_prev = rec.x;
      z = rec.z;
      if (adaptive) sigma.setZero();  // state re-anchored on the manifold
    } else {
      readout(rec);
    }
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

ErrorSeries compare_to_truth(const PredictionTrace& trace, const ParametricSystem& sys,
                             const Dictionary* dict, double rel_tol, double abs_tol) {
  ErrorSeries series;
  VectorField field = combined_field(sys, trace.p);
  Eigen::VectorXd x_true = trace.x0;
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    if (k > 0) {
      try {
        x_true = integrate(field, x_true, trace.t, rel_tol, abs_tol);
      } catch (const IntegrationError& e) {
        KOOPMAN_LOG_WARN("compare_to_truth: ground truth failed at step %zu (%s)", k, e.what());
        series.truncated = true;
        series.truncated_at = static_cast<int>(k);
        break;
      }
    }
    const StepRecord& rec = trace.steps[k];
    if (rec.has_state) {
      series.errors.push_back((rec.x - x_true).norm());
      series.lifted.push_back(false);
    } else if (dict) {
      series.errors.push_back((rec.z - dict->lift(x_true)).norm());
      series.lifted.push_back(true);
    } else {
      series.errors.push_back(std::numeric_limits<double>::quiet_NaN());
      series.lifted.push_back(true);
    }
  }
  return series;
}

}  // namespace koopman
