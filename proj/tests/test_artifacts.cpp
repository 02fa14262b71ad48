#include <doctest.h>

#include <umesh/artifacts.hpp>

#include <sstream>

using namespace umesh;

namespace {

TrialConfig sample_config() {
  TrialConfig cfg;
  cfg.architecture = Architecture::Clements;
  cfg.n_modes = 6;
  cfg.n_layers = 7;
  cfg.loss = LossKind::PhaseInsensitive;
  cfg.gradient = GradientMode::forward_difference(std::ldexp(1.0, -9));
  cfg.crosstalk = CrosstalkModel::neighbor_default();
  cfg.n_trials = 5;
  cfg.base_seed = 31415;
  cfg.optimizer.max_iterations = 321;
  cfg.optimizer.grad_tol = 1e-11;
  cfg.optimizer.history_size = 7;
  cfg.optimizer.history_stride = 3;
  cfg.record_param_history = true;
  cfg.include_output_phases = false;
  cfg.vary_target = true;
  return cfg;
}

}  // namespace

TEST_CASE("trial config JSON round-trip") {
  const TrialConfig cfg = sample_config();
  const nlohmann::json j = trial_config_to_json(cfg);
  const TrialConfig back = trial_config_from_json(j);

  CHECK(back.architecture == cfg.architecture);
  CHECK(back.n_modes == cfg.n_modes);
  CHECK(back.n_layers == cfg.n_layers);
  CHECK(back.loss == cfg.loss);
  CHECK(back.gradient.kind == cfg.gradient.kind);
  CHECK(back.gradient.delta == cfg.gradient.delta);
  REQUIRE(back.crosstalk.has_value());
  CHECK(*back.crosstalk == *cfg.crosstalk);
  CHECK(back.n_trials == cfg.n_trials);
  CHECK(back.base_seed == cfg.base_seed);
  CHECK(back.optimizer.max_iterations == cfg.optimizer.max_iterations);
  CHECK(back.optimizer.grad_tol == cfg.optimizer.grad_tol);
  CHECK(back.optimizer.history_size == cfg.optimizer.history_size);
  CHECK(back.optimizer.history_stride == cfg.optimizer.history_stride);
  CHECK(back.record_param_history == cfg.record_param_history);
  CHECK(back.include_output_phases == cfg.include_output_phases);
  CHECK(back.vary_target == cfg.vary_target);

  // The echo of the round-tripped config is identical.
  CHECK(trial_config_to_json(back) == j);
}

TEST_CASE("trial config JSON: crosstalk shorthand and validation") {
  TrialConfig cfg = trial_config_from_json(nlohmann::json{{"crosstalk", true}});
  REQUIRE(cfg.crosstalk.has_value());
  CHECK(*cfg.crosstalk == CrosstalkModel::neighbor_default());
  CHECK_FALSE(trial_config_from_json(nlohmann::json{{"crosstalk", false}}).crosstalk.has_value());

  CHECK_THROWS_AS(trial_config_from_json(nlohmann::json{{"bogus_field", 1}}), InvalidParameter);
  CHECK_THROWS_AS(trial_config_from_json(nlohmann::json{{"arch", "ring"}}), InvalidParameter);
  CHECK_THROWS_AS(trial_config_from_json(nlohmann::json{{"grad", "fd"}}), InvalidParameter);
}

TEST_CASE("traces CSV: layout and stable formatting") {
  TrialResult r0;
  r0.trial = 0;
  r0.optim.trace = {0.5, 0.25};
  TrialResult r1;
  r1.trial = 1;
  r1.failed = true;  // contributes no rows
  TrialResult r2;
  r2.trial = 2;
  r2.optim.trace = {1.0 / 3.0};

  const std::string csv = traces_csv_string({r0, r1, r2});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "trial,iteration,loss");
  std::getline(in, line);
  CHECK(line == "0,0,0.5");
  std::getline(in, line);
  CHECK(line == "0,1,0.25");
  std::getline(in, line);
  CHECK(line == "2,0," + format_double(1.0 / 3.0));
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("history CSV round-trip preserves doubles exactly") {
  std::vector<Eigen::VectorXd> history;
  Eigen::VectorXd a(3), b(3);
  a << 0.1, -2.718281828459045, 1e-300;
  b << 3.0, 0.0, -0.3333333333333333;
  history.push_back(a);
  history.push_back(b);

  std::stringstream ss;
  write_history_csv(ss, history);
  const auto back = read_history_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK((back[0] - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back[1] - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("summary JSON carries quantiles, stats and the config echo") {
  TrialConfig cfg = sample_config();
  cfg.loss = LossKind::PhaseInsensitive;

  TrialResult ok;
  ok.trial = 0;
  ok.optim.trace = {0.5, 0.2, 0.08};
  ok.optim.final_loss = 0.08;
  ok.optim.n_iterations = 2;
  ok.optim.termination = Termination::MaxIters;
  ok.initial_loss = 0.5;
  ok.n_loss_evals = 123;
  TrialResult bad;
  bad.trial = 1;
  bad.failed = true;
  bad.error = "boom";

  const std::vector<TrialResult> results = {ok, bad};
  const nlohmann::json j = summary_to_json(cfg, results, summarize(results));

  CHECK(j["schema_version"] == kRunSchemaVersion);
  CHECK(j["config"] == trial_config_to_json(cfg));
  CHECK(j["n_failed"] == 1);
  CHECK(j["per_iteration"]["median"].size() == 3);
  CHECK(j["final_loss"]["min"] == doctest::Approx(0.08));
  // Phase-insensitive runs also report the 4N-normalized loss.
  CHECK(j["final_loss_normalized"]["min"] == doctest::Approx(0.08 / 24.0));
  CHECK(j["termination"]["failed"] == 1);
  CHECK(j["trials"].size() == 2);
  CHECK(j["trials"][1]["error"] == "boom");
}

TEST_CASE("trajectory and sweep JSON") {
  TrajectoryRecord rec;
  rec.axis1 = Eigen::Vector3d(1, 0, 0);
  rec.axis2 = Eigen::Vector3d(0, 1, 0);
  rec.projected_path = {{0.0, 0.0}, {1.0, 0.5}};
  rec.explained_variance = {0.9, 0.05};
  rec.axis1_range = {-1.0, 2.0};
  rec.axis2_range = {-0.5, 1.0};
  rec.grid = Eigen::MatrixXd::Zero(2, 2);
  rec.grid(1, 0) = -3.5;

  const nlohmann::json j = trajectory_to_json(rec);
  CHECK(j["axes"].size() == 2);
  CHECK(j["axes"][0].size() == 3);
  CHECK(j["projected_path"].size() == 2);
  CHECK(j["grid_resolution"] == 2);
  REQUIRE(j["grid"].size() == 4);
  CHECK(j["grid"][2] == doctest::Approx(-3.5));  // row-major

  DeltaSweepEntry e;
  e.delta = 0.015625;
  e.final_losses = {1e-5, 2e-5};
  e.stats = final_loss_stats(e.final_losses);
  const nlohmann::json sj = sweep_to_json({e});
  CHECK(sj["entries"].size() == 1);
  CHECK(sj["entries"][0]["delta"] == doctest::Approx(0.015625));
  CHECK(sj["entries"][0]["final_losses"].size() == 2);
}

TEST_CASE("format_double survives a round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e-17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}
