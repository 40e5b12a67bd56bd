#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "koopman/model_io.hpp"
#include "koopman/runner.hpp"
#include "oracles.hpp"

using namespace koopman;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("koopman_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_pitchfork_config() {
  RunConfig cfg = config_from_json_text("{}");
  cfg.n_samples = 400;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("format_double round trips binary64 exactly") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-308, 1.7976931348623157e308, 0.0, -42.125}) {
    CHECK(parse_double(format_double(v)) == v);
  }
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("model save/load round trip is bit exact") {
  RunConfig cfg = small_pitchfork_config();
  FitResult fit = run_fit(cfg);

  fs::path dir = temp_dir("roundtrip");
  std::string path = (dir / "model.json").string();
  save_model(fit.model, &fit.covariance, path, "uniform");
  LoadedModel loaded = load_model(path);

  CHECK(loaded.model.dict == fit.model.dict);
  CHECK(loaded.model.t == fit.model.t);
  CHECK(loaded.model.m == fit.model.m);
  CHECK(loaded.model.feature_scale == fit.model.feature_scale);
  CHECK(loaded.model.state_domain.lo == fit.model.state_domain.lo);
  CHECK(loaded.model.param_domain.hi == fit.model.param_domain.hi);
  REQUIRE(loaded.model.blocks.size() == fit.model.blocks.size());
  for (std::size_t b = 0; b < fit.model.blocks.size(); ++b)
    CHECK(loaded.model.blocks[b] == fit.model.blocks[b]);
  REQUIRE(loaded.covariance.has_value());
  REQUIRE(loaded.covariance->blocks.size() == fit.covariance.blocks.size());
  for (std::size_t b = 0; b < fit.covariance.blocks.size(); ++b)
    CHECK(loaded.covariance->blocks[b] == fit.covariance.blocks[b]);
  CHECK(loaded.param_sampling == "uniform");

  SUBCASE("model without covariance loads with Q absent") {
    std::string path2 = (dir / "model_noq.json").string();
    save_model(fit.model, nullptr, path2);
    CHECK(!load_model(path2).covariance.has_value());
  }

  SUBCASE("checksum tamper is rejected") {
    std::string text = slurp(path);
    auto pos = text.find("\"checksum\"");
    REQUIRE(pos != std::string::npos);
    auto digit = text.find(':', pos) + 3;
    text[digit] = (text[digit] == '0') ? '1' : '0';
    std::string bad = (dir / "bad.json").string();
    std::ofstream(bad, std::ios::binary) << text;
    CHECK_THROWS_AS((void)load_model(bad), ModelFileError);
  }

  SUBCASE("block shape mismatch is rejected") {
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    j.erase("checksum");
    j["blocks"][0]["shape"] = {3, 3};
    j["checksum"] = fnv1a_hex(j.dump(2));
    std::string bad = (dir / "badshape.json").string();
    std::ofstream(bad, std::ios::binary) << j.dump(2);
    CHECK_THROWS_AS((void)load_model(bad), ModelFileError);
  }

  SUBCASE("unknown format version is rejected") {
    nlohmann::json j = nlohmann::json::parse(slurp(path));
    j.erase("checksum");
    j["format_version"] = 99;
    j["checksum"] = fnv1a_hex(j.dump(2));
    std::string bad = (dir / "badver.json").string();
    std::ofstream(bad, std::ios::binary) << j.dump(2);
    CHECK_THROWS_AS((void)load_model(bad), ModelFileError);
  }
}

TEST_CASE("refits with the same config are byte identical") {
  RunConfig cfg = small_pitchfork_config();
  fs::path a = temp_dir("det_a"), b = temp_dir("det_b");
  FitResult fa = run_fit(cfg);
  FitResult fb = run_fit(cfg);
  save_model(fa.model, &fa.covariance, (a / "model.json").string());
  save_model(fb.model, &fb.covariance, (b / "model.json").string());
  CHECK(slurp(a / "model.json") == slurp(b / "model.json"));
}

TEST_CASE("config parsing: defaults, canonical echo, validation") {
  RunConfig cfg = config_from_json_text("{}");
  CHECK(cfg.system == "pitchfork");
  CHECK(cfg.degree == 5);
  CHECK(cfg.t == 0.1);
  CHECK(cfg.n_samples == 5000);

  std::string echoed = echo_config(cfg);
  RunConfig reparsed = config_from_json_text(echoed);
  CHECK(echo_config(reparsed) == echoed);
  CHECK(config_hash(reparsed) == config_hash(cfg));

  CHECK_THROWS_AS((void)config_from_json_text("{\"system\": \"rossler\"}"), ConfigError);
  CHECK_THROWS_AS((void)config_from_json_text("{\"dictionary\": {\"degree\": -1}}"), ConfigError);
  CHECK_THROWS_AS((void)config_from_json_text("not json"), ConfigError);

  RunConfig lor = config_from_json_text(
      "{\"system\": \"lorenz\", \"dictionary\": {\"degree\": 3, \"exclude\": [[1,0,0]]}, "
      "\"t\": 0.01}");
  CHECK(lor.system == "lorenz");
  CHECK(lor.degree == 3);
  REQUIRE(lor.exclude.size() == 1);
  CHECK(lor.exclude[0] == MultiIndex{1, 0, 0});
}

TEST_CASE("cmd_fit and cmd_predict produce the documented artifacts") {
  RunConfig cfg = small_pitchfork_config();
  cfg.params = {Eigen::VectorXd::Constant(1, 1.0)};
  cfg.initial_states = {Eigen::VectorXd::Constant(1, 0.5)};
  cfg.n_steps = 20;

  fs::path dir = temp_dir("cmd");
  std::string model_path = cmd_fit(cfg, dir.string());
  CHECK(fs::exists(model_path));
  CHECK(fs::exists(dir / "config_echo.json"));
  CHECK(fs::exists(dir / "fit_diagnostics.json"));

  LoadedModel loaded = load_model(model_path);
  int failures = cmd_predict(cfg, loaded, dir.string());
  CHECK(failures == 0);
  CHECK(fs::exists(dir / "summary.json"));

  // One trace per (predictor, p, x0); default predictors cover all three modes.
  int traces = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().filename().string().rfind("trace_", 0) == 0) ++traces;
  CHECK(traces == 3);

  // Trace files embed the config hash and the documented header.
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().rfind("trace_", 0) != 0) continue;
    std::string text = slurp(entry.path());
    CHECK(text.find("# config_hash=" + config_hash(cfg)) != std::string::npos);
    CHECK(text.find("k,time,") != std::string::npos);
  }

  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary.contains("runs"));
  CHECK(summary["runs"].size() == 3);
}

TEST_CASE("cmd_bifurcation emits one row per grid point and parameter") {
  RunConfig cfg = small_pitchfork_config();
  cfg.bifurcation_params = {-1.0, 1.0};
  cfg.grid_points = 41;
  fs::path dir = temp_dir("bif");
  std::string model_path = cmd_fit(cfg, dir.string());
  cmd_bifurcation(cfg, load_model(model_path), dir.string());

  std::string text = slurp(dir / "bifurcation.csv");
  int rows = 0;
  for (char c : text)
    if (c == '\n') ++rows;
  CHECK(rows >= 2 * 41);  // header/comments plus 41 rows per parameter
  CHECK(text.find("p,x,standard,coordinate,max_likelihood,truth") != std::string::npos);
}

TEST_CASE("cli binary: exit codes for missing config and a fit run") {
  fs::path dir = temp_dir("cli");
  std::string cli = KOOPMAN_CLI_PATH;

  int missing = std::system((cli + " fit --config /nonexistent.json --out " + dir.string() +
                             " > /dev/null 2>&1")
                                .c_str());
  CHECK(WEXITSTATUS(missing) == 1);

  std::ofstream(dir / "cfg.json") << "{\"samples\": {\"n\": 300}}";
  int ok = std::system((cli + " fit --config " + (dir / "cfg.json").string() + " --out " +
                        dir.string() + " > /dev/null 2>&1")
                           .c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  CHECK(fs::exists(dir / "model.json"));
}
