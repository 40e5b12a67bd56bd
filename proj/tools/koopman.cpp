// Command-line front end: data generation, fitting, prediction runs,
// bifurcation sweeps, Newton benchmarks and adaptive multistep studies.
// All numerical output goes to CSV/JSON files under --out.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "koopman/log.hpp"
#include "koopman/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitNumericalError = 2;
constexpr int kExitPartialFailure = 3;

struct CommonArgs {
  std::string config_path;
  std::string model_path;
  std::string out_dir = "out";
  std::int64_t seed_override = -1;
  int threads = 0;
};

koopman::RunConfig prepare(const CommonArgs& args) {
  koopman::RunConfig cfg = koopman::load_config(args.config_path);
  if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
#ifdef _OPENMP
  if (args.threads > 0) omp_set_num_threads(args.threads);
#endif
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_model) {
  cmd->add_option("--config", args.config_path, "run configuration (JSON)")->required();
  if (needs_model)
    cmd->add_option("--model", args.model_path, "fitted model file")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed_override, "override the config seed");
  cmd->add_option("--threads", args.threads, "OpenMP thread count (0 = default)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consistency-preserving Koopman prediction for parameter-affine systems"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* fit = app.add_subcommand("fit", "sample data, fit the model and covariance surrogate");
  add_common(fit, args, false);
  CLI::App* predict = app.add_subcommand("predict", "multistep prediction runs");
  add_common(predict, args, true);
  CLI::App* bifurcation = app.add_subcommand("bifurcation", "one-step return maps over a parameter sweep");
  add_common(bifurcation, args, true);
  CLI::App* newton_bench = app.add_subcommand("newton-bench", "Newton iteration convergence logs");
  add_common(newton_bench, args, true);
  CLI::App* multistep = app.add_subcommand("multistep", "covariance-triggered adaptive prediction");
  add_common(multistep, args, true);
  CLI::App* simulate = app.add_subcommand("simulate", "ground-truth trajectories only");
  add_common(simulate, args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    koopman::RunConfig cfg = prepare(args);
    if (fit->parsed()) {
      std::string path = koopman::cmd_fit(cfg, args.out_dir);
      std::printf("model written to %s\n", path.c_str());
    } else if (simulate->parsed()) {
      koopman::cmd_simulate(cfg, args.out_dir);
    } else {
      koopman::LoadedModel loaded = koopman::load_model(args.model_path);
      if (predict->parsed()) {
        int failures = koopman::cmd_predict(cfg, loaded, args.out_dir);
        if (failures > 0) {
          std::fprintf(stderr, "%d run(s) failed; see summary.json\n", failures);
          return kExitPartialFailure;
        }
      } else if (bifurcation->parsed()) {
        koopman::cmd_bifurcation(cfg, loaded, args.out_dir);
      } else if (newton_bench->parsed()) {
        koopman::cmd_newton_bench(cfg, loaded, args.out_dir);
      } else if (multistep->parsed()) {
        koopman::cmd_multistep(cfg, loaded, args.out_dir);
      }
    }
  } catch (const koopman::ConfigError& e) {
    KOOPMAN_LOG_ERROR("%s", e.what());
    return kExitConfigError;
  } catch (const koopman::ModelFileError& e) {
    KOOPMAN_LOG_ERROR("%s", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    KOOPMAN_LOG_ERROR("%s", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    KOOPMAN_LOG_ERROR("%s", e.what());
    return kExitNumericalError;
  }
  return kExitOk;
}
