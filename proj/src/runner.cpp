#include "koopman/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "koopman/batch.hpp"
#include "koopman/log.hpp"

namespace koopman {

namespace {

using nlohmann::json;

Eigen::VectorXd vec_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<int>(j.size()));
  for (int i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

TriggerMeasure parse_measure(const std::string& s) {
  if (s == "trace") return TriggerMeasure::trace;
  if (s == "diag_entry") return TriggerMeasure::diag_entry;
  throw ConfigError("unknown trigger measure: " + s);
}

std::string measure_name(TriggerMeasure m) {
  return m == TriggerMeasure::trace ? "trace" : "diag_entry";
}

PredictorConfig predictor_from_json(const json& j) {
  PredictorConfig pc;
  pc.mode = parse_predictor_mode(j.value("mode", std::string("standard")));
  pc.schedule = j.value("schedule", std::string("every_step")) == "adaptive" ? Schedule::adaptive
                                                                             : Schedule::every_step;
  pc.measure = parse_measure(j.value("measure", std::string("trace")));
  pc.diag_index = j.value("diag_index", 0);
  pc.trigger_factor = j.value("trigger_factor", 10.0);
  pc.ridge = j.value("ridge", -1.0);
  pc.newton_tol = j.value("newton_tol", 1e-8);
  pc.newton_k_max = j.value("newton_k_max", 50);
  return pc;
}

json predictor_to_json(const PredictorConfig& pc) {
  return json{{"mode", to_string(pc.mode)},
              {"schedule", pc.schedule == Schedule::adaptive ? "adaptive" : "every_step"},
              {"measure", measure_name(pc.measure)},
              {"diag_index", pc.diag_index},
              {"trigger_factor", pc.trigger_factor},
              {"ridge", pc.ridge},
              {"newton_tol", pc.newton_tol},
              {"newton_k_max", pc.newton_k_max}};
}

std::string trace_file_name(const PredictorConfig& pc, int pi, int xi) {
  std::ostringstream name;
  name << "trace_" << to_string(pc.mode);
  if (pc.schedule == Schedule::adaptive) name << "_adaptive" << pc.trigger_factor;
  name << "_p" << pi << "_x" << xi << ".csv";
  return name.str();
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

std::string csv_header(const RunConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " format_version=1\n";
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  try {
    RunConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);
    if (cfg.schema_version != 1) throw ConfigError("unsupported schema_version");
    cfg.system = j.value("system", cfg.system);
    if (j.contains("dictionary")) {
      const auto& d = j.at("dictionary");
      cfg.degree = d.value("degree", cfg.degree);
      if (d.contains("exclude")) cfg.exclude = d.at("exclude").get<std::vector<MultiIndex>>();
    }
    cfg.t = j.value("t", cfg.t);
    if (j.contains("samples")) {
      const auto& s = j.at("samples");
      cfg.n_samples = s.value("n", cfg.n_samples);
      cfg.seed = s.value("seed", cfg.seed);
      cfg.sampling = s.value("sampling", cfg.sampling);
      cfg.trajectory_length = s.value("trajectory_length", cfg.trajectory_length);
    }
    if (j.contains("fit")) {
      cfg.ridge = j.at("fit").value("ridge", cfg.ridge);
    }
    if (j.contains("integrator")) {
      cfg.rel_tol = j.at("integrator").value("rel_tol", cfg.rel_tol);
      cfg.abs_tol = j.at("integrator").value("abs_tol", cfg.abs_tol);
    }
    if (j.contains("predict")) {
      const auto& p = j.at("predict");
      if (p.contains("params"))
        for (const auto& row : p.at("params")) cfg.params.push_back(vec_from_json(row));
      if (p.contains("initial_states"))
        for (const auto& row : p.at("initial_states"))
          cfg.initial_states.push_back(vec_from_json(row));
      cfg.n_steps = p.value("n_steps", cfg.n_steps);
      if (p.contains("predictors"))
        for (const auto& row : p.at("predictors")) cfg.predictors.push_back(predictor_from_json(row));
    }
    if (j.contains("bifurcation")) {
      const auto& b = j.at("bifurcation");
      if (b.contains("params"))
        for (const auto& v : b.at("params")) cfg.bifurcation_params.push_back(v.get<double>());
      cfg.grid_points = b.value("grid_points", cfg.grid_points);
    }
    if (j.contains("multistep")) {
      const auto& ms = j.at("multistep");
      if (ms.contains("factors")) cfg.trigger_factors = ms.at("factors").get<std::vector<double>>();
      cfg.trigger_measure = parse_measure(ms.value("measure", std::string("trace")));
      cfg.trigger_diag_index = ms.value("diag_index", 0);
    }
    if (j.contains("newton_bench")) cfg.bench_every = j.at("newton_bench").value("every", 20);
    if (cfg.predictors.empty()) {
      for (auto mode :
           {PredictorMode::standard, PredictorMode::coordinate, PredictorMode::max_likelihood}) {
        PredictorConfig pc;
        pc.mode = mode;
        cfg.predictors.push_back(pc);
      }
    }

    try {
      (void)parse_system_name(cfg.system);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (cfg.degree < 1) throw ConfigError("dictionary.degree must be positive");
    if (cfg.t <= 0) throw ConfigError("t must be positive");
    if (cfg.n_samples < 1) throw ConfigError("samples.n must be positive");
    if (cfg.sampling != "iid" && cfg.sampling != "trajectory")
      throw ConfigError("samples.sampling must be 'iid' or 'trajectory'");
    if (cfg.trajectory_length < 1) throw ConfigError("samples.trajectory_length must be positive");
    if (cfg.ridge < 0) throw ConfigError("fit.ridge must be nonnegative");
    if (cfg.rel_tol <= 0 || cfg.abs_tol <= 0) throw ConfigError("integrator tolerances must be positive");
    if (cfg.n_steps < 0) throw ConfigError("predict.n_steps must be nonnegative");
    if (cfg.grid_points < 2) throw ConfigError("bifurcation.grid_points must be at least 2");
    for (double f : cfg.trigger_factors)
      if (!(f > 1.0)) throw ConfigError("multistep.factors must exceed 1");
    for (const auto& pc : cfg.predictors)
      if (pc.schedule == Schedule::adaptive && !(pc.trigger_factor > 1.0))
        throw ConfigError("predictor trigger_factor must exceed 1");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config schema error: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::string echo_config(const RunConfig& cfg) {
  json predictors = json::array();
  for (const auto& pc : cfg.predictors) predictors.push_back(predictor_to_json(pc));
  json params = json::array(), states = json::array();
  for (const auto& p : cfg.params) params.push_back(vec_to_json(p));
  for (const auto& x : cfg.initial_states) states.push_back(vec_to_json(x));
  json j{{"schema_version", cfg.schema_version},
         {"system", cfg.system},
         {"dictionary", {{"degree", cfg.degree}, {"exclude", cfg.exclude}}},
         {"t", cfg.t},
         {"samples",
          {{"n", cfg.n_samples},
           {"seed", cfg.seed},
           {"sampling", cfg.sampling},
           {"trajectory_length", cfg.trajectory_length}}},
         {"fit", {{"ridge", cfg.ridge}}},
         {"integrator", {{"rel_tol", cfg.rel_tol}, {"abs_tol", cfg.abs_tol}}},
         {"predict",
          {{"params", params},
           {"initial_states", states},
           {"n_steps", cfg.n_steps},
           {"predictors", predictors}}},
         {"bifurcation", {{"params", cfg.bifurcation_params}, {"grid_points", cfg.grid_points}}},
         {"multistep",
          {{"factors", cfg.trigger_factors},
           {"measure", measure_name(cfg.trigger_measure)},
           {"diag_index", cfg.trigger_diag_index}}},
         {"newton_bench", {{"every", cfg.bench_every}}}};
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(echo_config(cfg)); }

FitResult run_fit(const RunConfig& cfg) {
  ParametricSystem sys = builtin_system(parse_system_name(cfg.system));
  Dictionary dict(sys.dim(), cfg.degree, cfg.exclude);

  SnapshotOptions sopts;
  sopts.n = cfg.n_samples;
  sopts.seed = cfg.seed;
  sopts.t = cfg.t;
  sopts.rel_tol = cfg.rel_tol;
  sopts.abs_tol = cfg.abs_tol;
  sopts.sampling = cfg.sampling == "trajectory" ? SamplingMode::trajectory : SamplingMode::iid;
  sopts.trajectory_length = cfg.trajectory_length;
  SnapshotSet data = generate_snapshots(sys, sopts);

  FitResult res;
  FitOptions fopts;
  fopts.ridge = cfg.ridge;
  res.model = fit_parametric(dict, data, fopts, &res.diagnostics);
  res.model.state_domain = sys.state_domain;
  res.model.param_domain = sys.param_domain;
  res.covariance = fit_Q(residuals(res.model, data), res.model.m);
  KOOPMAN_LOG_INFO("fit: residual RMS %.3e, cond %.3e, ridge %.3e", res.diagnostics.residual_rms,
                   res.diagnostics.condition_number, res.diagnostics.ridge_used);
  return res;
}

std::string cmd_fit(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  FitResult fr = run_fit(cfg);
  const std::string model_path = out_dir + "/model.json";
  save_model(fr.model, &fr.covariance, model_path, cfg.sampling == "grid" ? "grid" : "uniform");
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));

  json diag{{"config_hash", config_hash(cfg)},
            {"residual_rms", fr.diagnostics.residual_rms},
            {"condition_number", fr.diagnostics.condition_number},
            {"smallest_singular", fr.diagnostics.smallest_singular},
            {"ridge_used", fr.diagnostics.ridge_used}};
  write_file_atomic(out_dir + "/fit_diagnostics.json", diag.dump(2) + "\n");
  return model_path;
}

namespace {

void write_trace_csv(const RunConfig& cfg, const PredictionTrace& trace, const ErrorSeries& errors,
                     const std::string& path) {
  std::ostringstream out;
  out << csv_header(cfg);
  const int d = static_cast<int>(trace.x0.size());
  out << "k,time";
  for (int i = 0; i < d; ++i) out << ",x" << i;
  out << ",cov_measure,reprojected,newton_iters,error\n";
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const StepRecord& rec = trace.steps[k];
    out << k << "," << format_double(static_cast<double>(k) * trace.t);
    for (int i = 0; i < d; ++i)
      out << "," << (rec.has_state ? format_double(rec.x[i]) : std::string("nan"));
    out << "," << format_double(rec.cov_measure) << "," << (rec.reprojected ? 1 : 0) << ","
        << rec.newton_iterations << ",";
    out << (k < errors.errors.size() ? format_double(errors.errors[k]) : std::string("nan"));
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

}  // namespace

int cmd_predict(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir) {
  ensure_dir(out_dir);
  ParametricSystem sys = builtin_system(parse_system_name(cfg.system));
  const CovarianceSurrogate* Q = loaded.covariance ? &*loaded.covariance : nullptr;

  json summary{{"config_hash", config_hash(cfg)}, {"format_version", 1}, {"runs", json::array()}};
  int failures = 0;
  for (std::size_t ci = 0; ci < cfg.predictors.size(); ++ci) {
    const PredictorConfig& pc = cfg.predictors[ci];
    for (std::size_t pi = 0; pi < cfg.params.size(); ++pi) {
      for (std::size_t xi = 0; xi < cfg.initial_states.size(); ++xi) {
        json run{{"predictor", predictor_to_json(pc)},
                 {"p", vec_to_json(cfg.params[pi])},
                 {"x0", vec_to_json(cfg.initial_states[xi])}};
        try {
          PredictionTrace trace = predict(loaded.model, Q, pc, cfg.initial_states[xi],
                                          cfg.params[pi], cfg.n_steps);
          ErrorSeries errors = compare_to_truth(trace, sys, &loaded.model.dict, cfg.rel_tol,
                                                cfg.abs_tol);
          const std::string file =
              trace_file_name(pc, static_cast<int>(pi), static_cast<int>(xi));
          write_trace_csv(cfg, trace, errors, out_dir + "/" + file);
          int reprojections = 0;
          for (const auto& s : trace.steps) reprojections += s.reprojected ? 1 : 0;
          run["trace_file"] = file;
          run["terminal_error"] = errors.errors.empty() ? -1.0 : errors.errors.back();
          run["reprojections"] = reprojections;
          run["truth_truncated_at"] = errors.truncated ? errors.truncated_at : -1;
          run["status"] = "ok";
        } catch (const std::exception& e) {
          KOOPMAN_LOG_ERROR("predict run failed: %s", e.what());
          run["status"] = "failed";
          run["error"] = e.what();
          ++failures;
        }
        summary["runs"].push_back(std::move(run));
      }
    }
  }
  write_file_atomic(out_dir + "/summary.json", summary.dump(2) + "\n");
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));
  return failures;
}

void cmd_bifurcation(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir) {
  ensure_dir(out_dir);
  const KoopmanModel& model = loaded.model;
  if (model.dict.dim() != 1)
    throw ConfigError("bifurcation sweep requires a one-dimensional system");
  if (!loaded.covariance) throw ConfigError("bifurcation sweep requires a covariance surrogate");
  ParametricSystem sys = builtin_system(parse_system_name(cfg.system));
  const Box& domain = model.state_domain;

  std::ostringstream out;
  out << csv_header(cfg);
  out << "p,x,standard,coordinate,max_likelihood,truth\n";
  for (double pval : cfg.bifurcation_params) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(1, pval);
    VectorField field = combined_field(sys, p);
    WeightMatrix W = ml_weight(*loaded.covariance, p,
                               1e-10 * std::abs(loaded.covariance->quad(
                                            CovarianceSurrogate::augment(p)).trace()) /
                                   model.lifted_dim());
    NewtonOptions nopts;
    nopts.domain = domain;
    for (int g = 0; g < cfg.grid_points; ++g) {
      Eigen::VectorXd x(1);
      x[0] = domain.lo[0] + (domain.hi[0] - domain.lo[0]) * static_cast<double>(g) /
                                static_cast<double>(cfg.grid_points - 1);
      Eigen::VectorXd z = model.apply(p, model.dict.lift(x));
      double standard = model.dict.invert_on_manifold(z)[0];
      double coord = coordinate_project(model.dict, z).x[0];
      double ml = newton_project(model.dict, W, z, x, nopts).x[0];
      double truth = integrate(field, x, model.t, cfg.rel_tol, cfg.abs_tol)[0];
      out << format_double(pval) << "," << format_double(x[0]) << "," << format_double(standard)
          << "," << format_double(coord) << "," << format_double(ml) << ","
          << format_double(truth) << "\n";
    }
  }
  write_file_atomic(out_dir + "/bifurcation.csv", out.str());
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));
}

void cmd_newton_bench(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir) {
  ensure_dir(out_dir);
  if (!loaded.covariance) throw ConfigError("newton-bench requires a covariance surrogate");
  if (cfg.params.empty() || cfg.initial_states.empty())
    throw ConfigError("newton-bench requires predict.params and predict.initial_states");

  PredictorConfig pc;
  pc.mode = PredictorMode::max_likelihood;
  for (const auto& cand : cfg.predictors)
    if (cand.mode == PredictorMode::max_likelihood) pc = cand;
  pc.schedule = Schedule::every_step;

  std::ostringstream out;
  out << csv_header(cfg);
  out << "p_index,x_index,step,iter,step_norm,converged\n";
  for (std::size_t pi = 0; pi < cfg.params.size(); ++pi)
    for (std::size_t xi = 0; xi < cfg.initial_states.size(); ++xi) {
      PredictionTrace trace = predict(loaded.model, &*loaded.covariance, pc,
                                      cfg.initial_states[xi], cfg.params[pi], cfg.n_steps);
      for (std::size_t k = 0; k < trace.steps.size(); ++k) {
        if (k == 0 || k % static_cast<std::size_t>(cfg.bench_every) != 0) continue;
        const StepRecord& rec = trace.steps[k];
        for (std::size_t it = 0; it < rec.newton_step_norms.size(); ++it)
          out << pi << "," << xi << "," << k << "," << it + 1 << ","
              << format_double(rec.newton_step_norms[it]) << "," << (rec.newton_converged ? 1 : 0)
              << "\n";
      }
    }
  write_file_atomic(out_dir + "/newton_bench.csv", out.str());
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));
}

std::vector<int> reprojection_intervals(const PredictionTrace& trace) {
  std::vector<int> intervals;
  int last = 0;
  for (std::size_t k = 1; k < trace.steps.size(); ++k) {
    if (trace.steps[k].reprojected) {
      intervals.push_back(static_cast<int>(k) - last);
      last = static_cast<int>(k);
    }
  }
  return intervals;
}

void cmd_multistep(const RunConfig& cfg, const LoadedModel& loaded, const std::string& out_dir) {
  ensure_dir(out_dir);
  if (!loaded.covariance) throw ConfigError("multistep requires a covariance surrogate");
  if (cfg.params.empty() || cfg.initial_states.empty())
    throw ConfigError("multistep requires predict.params and predict.initial_states");

  json summary{{"config_hash", config_hash(cfg)}, {"factors", json::array()}};
  for (double factor : cfg.trigger_factors) {
    PredictorConfig pc;
    pc.mode = PredictorMode::max_likelihood;
    pc.schedule = Schedule::adaptive;
    pc.measure = cfg.trigger_measure;
    pc.diag_index = cfg.trigger_diag_index;
    pc.trigger_factor = factor;

    json factor_entry{{"factor", factor}, {"runs", json::array()}};
    for (std::size_t pi = 0; pi < cfg.params.size(); ++pi)
      for (std::size_t xi = 0; xi < cfg.initial_states.size(); ++xi) {
        PredictionTrace trace = predict(loaded.model, &*loaded.covariance, pc,
                                        cfg.initial_states[xi], cfg.params[pi], cfg.n_steps);
        std::vector<int> intervals = reprojection_intervals(trace);
        std::ostringstream trace_out;
        trace_out << csv_header(cfg) << "k,cov_measure,reprojected\n";
        for (std::size_t k = 0; k < trace.steps.size(); ++k)
          trace_out << k << "," << format_double(trace.steps[k].cov_measure) << ","
                    << (trace.steps[k].reprojected ? 1 : 0) << "\n";
        std::ostringstream name;
        name << "multistep_f" << factor << "_p" << pi << "_x" << xi << ".csv";
        write_file_atomic(out_dir + "/" + name.str(), trace_out.str());
        double mean_interval = 0.0;
        for (int iv : intervals) mean_interval += iv;
        if (!intervals.empty()) mean_interval /= static_cast<double>(intervals.size());
        factor_entry["runs"].push_back(json{{"p", vec_to_json(cfg.params[pi])},
                                            {"x0", vec_to_json(cfg.initial_states[xi])},
                                            {"intervals", intervals},
                                            {"mean_interval", mean_interval},
                                            {"trace_file", name.str()}});
      }
    summary["factors"].push_back(std::move(factor_entry));
  }
  write_file_atomic(out_dir + "/multistep_summary.json", summary.dump(2) + "\n");
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));
}

void cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  if (cfg.params.empty() || cfg.initial_states.empty())
    throw ConfigError("simulate requires predict.params and predict.initial_states");
  ParametricSystem sys = builtin_system(parse_system_name(cfg.system));
  for (std::size_t pi = 0; pi < cfg.params.size(); ++pi)
    for (std::size_t xi = 0; xi < cfg.initial_states.size(); ++xi) {
      VectorField field = combined_field(sys, cfg.params[pi]);
      std::ostringstream out;
      out << csv_header(cfg) << "k,time";
      for (int i = 0; i < sys.dim(); ++i) out << ",x" << i;
      out << "\n";
      Eigen::VectorXd x = cfg.initial_states[xi];
      for (int k = 0; k <= cfg.n_steps; ++k) {
        if (k > 0) x = integrate(field, x, cfg.t, cfg.rel_tol, cfg.abs_tol);
        out << k << "," << format_double(k * cfg.t);
        for (int i = 0; i < sys.dim(); ++i) out << "," << format_double(x[i]);
        out << "\n";
      }
      std::ostringstream name;
      name << "truth_p" << pi << "_x" << xi << ".csv";
      write_file_atomic(out_dir + "/" + name.str(), out.str());
    }
  write_file_atomic(out_dir + "/config_echo.json", echo_config(cfg));
}

}  // namespace koopman
