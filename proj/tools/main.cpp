// unitary-mesh: batch experiment runner for programmable unitary converters.
//
// Subcommands:
//   run        optimize one configuration, emit traces.csv / summary.json / manifest.json
//   landscape  project a recorded optimization path with PCA and grid the loss
//   sweep      repeat a run across finite-difference resolutions
//   check      gradient and invariant self-test
//
// Exit codes: 0 success, 2 usage/config error, 3 internal numeric failure.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <umesh/artifacts.hpp>
#include <umesh/device_io.hpp>
#include <umesh/experiments.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace umesh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// helpers

double parse_delta(const std::string& text) {
  // Accepts "2^-10" for power-of-two resolutions or any decimal literal.
  if (text.rfind("2^", 0) == 0) {
    const int expo = std::stoi(text.substr(2));
    return std::ldexp(1.0, expo);
  }
  return std::stod(text);
}

std::vector<double> parse_delta_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!tok.empty()) out.push_back(parse_delta(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw InvalidParameter("config file " + path.string() + ": " + ex.what());
  }
}

int effective_jobs(int jobs_flag) {
  // The environment variable deliberately wins over the flag so wrapper
  // scripts can cap parallelism without touching argument lists.
  if (const char* env = std::getenv("UNITARY_MESH_JOBS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
      throw InvalidParameter("UNITARY_MESH_JOBS is not an integer");
    }
  }
  return jobs_flag;
}

// ---------------------------------------------------------------------------
// config flags (shared by run and sweep): a flat JSON config file where any
// field can be overridden by the flag of the same name.

struct ConfigFlags {
  std::string config_path;
  std::string arch, loss, grad, delta;
  std::int64_t n = 0, m = 0, trials = 0, history_stride = 0, max_iterations = 0,
               lbfgs_history = 0;
  std::uint64_t seed = 0;
  double grad_tol = 0.0;
  bool crosstalk = false, include_output_phases = false, vary_target = false,
       record_history = false;

  std::map<std::string, CLI::Option*> opts;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_path, "flat JSON config file");
  f.opts["arch"] = cmd->add_option("--arch", f.arch, "mplc | clements");
  f.opts["n"] = cmd->add_option("--n", f.n, "number of modes N");
  f.opts["m"] = cmd->add_option("--m", f.m, "number of layers m");
  f.opts["loss"] = cmd->add_option("--loss", f.loss, "frobenius | phase-insensitive");
  f.opts["grad"] = cmd->add_option("--grad", f.grad, "analytic | fd");
  f.opts["delta"] = cmd->add_option("--delta", f.delta, "fd probe step (e.g. 2^-10)");
  f.opts["crosstalk"] =
      cmd->add_flag("--crosstalk,!--no-crosstalk", f.crosstalk, "neighbor crosstalk kernel");
  f.opts["trials"] = cmd->add_option("--trials", f.trials, "number of optimization trials");
  f.opts["seed"] = cmd->add_option("--seed", f.seed, "base seed (all streams derive from it)");
  f.opts["include_output_phases"] = cmd->add_flag(
      "--include_output_phases,!--no-include_output_phases", f.include_output_phases,
      "keep the final phase-shifter array (MPLC)");
  f.opts["vary_target"] =
      cmd->add_flag("--vary_target,!--no-vary_target", f.vary_target, "fresh target per trial");
  f.opts["record_history"] = cmd->add_flag("--record_history,!--no-record_history",
                                           f.record_history, "store parameter snapshots");
  f.opts["history_stride"] =
      cmd->add_option("--history_stride", f.history_stride, "snapshot every k-th iterate");
  f.opts["max_iterations"] = cmd->add_option("--max_iterations", f.max_iterations, "L-BFGS cap");
  f.opts["grad_tol"] = cmd->add_option("--grad_tol", f.grad_tol, "gradient infinity-norm stop");
  f.opts["lbfgs_history"] =
      cmd->add_option("--lbfgs_history", f.lbfgs_history, "L-BFGS memory size");
}

bool flag_given(const ConfigFlags& f, const std::string& key) {
  const auto it = f.opts.find(key);
  return it != f.opts.end() && it->second->count() > 0;
}

json resolve_config_json(const ConfigFlags& f) {
  json j = f.config_path.empty() ? json::object() : load_json_file(f.config_path);
  if (!j.is_object()) throw InvalidParameter("config file must hold a JSON object");

  if (flag_given(f, "arch")) j["arch"] = f.arch;
  if (flag_given(f, "n")) j["n"] = f.n;
  if (flag_given(f, "m")) j["m"] = f.m;
  if (flag_given(f, "loss")) j["loss"] = f.loss;
  if (flag_given(f, "grad")) j["grad"] = f.grad;
  if (flag_given(f, "delta")) j["delta"] = parse_delta(f.delta);
  if (flag_given(f, "crosstalk")) j["crosstalk"] = f.crosstalk;
  if (flag_given(f, "trials")) j["trials"] = f.trials;
  if (flag_given(f, "seed")) j["seed"] = f.seed;
  if (flag_given(f, "include_output_phases")) j["include_output_phases"] = f.include_output_phases;
  if (flag_given(f, "vary_target")) j["vary_target"] = f.vary_target;
  if (flag_given(f, "record_history")) j["record_history"] = f.record_history;
  if (flag_given(f, "history_stride")) j["history_stride"] = f.history_stride;
  if (flag_given(f, "max_iterations")) j["max_iterations"] = f.max_iterations;
  if (flag_given(f, "grad_tol")) j["grad_tol"] = f.grad_tol;
  if (flag_given(f, "lbfgs_history")) j["lbfgs_history"] = f.lbfgs_history;
  return j;
}

// ---------------------------------------------------------------------------
// artifact emission shared by run and sweep

struct EmittedFiles {
  std::vector<std::pair<std::string, fs::path>> files;  // manifest name -> path

  void add(const fs::path& dir, const std::string& name) {
    files.emplace_back(name, dir / name);
  }
};

void write_run_artifacts(const fs::path& dir, const TrialConfig& cfg,
                         const std::vector<TrialResult>& results, EmittedFiles& emitted) {
  write_text_file(dir / "traces.csv", traces_csv_string(results));
  emitted.add(dir, "traces.csv");

  const json summary = summary_to_json(cfg, results, summarize(results));
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  emitted.add(dir, "summary.json");

  if (cfg.record_param_history) {
    fs::create_directories(dir / "history");
    for (const TrialResult& r : results) {
      if (r.failed) continue;
      const std::string name = "history/trial_" + std::to_string(r.trial) + ".csv";
      std::ofstream out(dir / name, std::ios::binary);
      write_history_csv(out, r.optim.param_history);
      out.close();
      emitted.add(dir, name);
    }
  }
}

void write_manifest(const fs::path& dir, const TrialConfig& cfg, int jobs,
                    const EmittedFiles& emitted) {
  json manifest;
  manifest["schema_version"] = kRunSchemaVersion;
  manifest["config"] = trial_config_to_json(cfg);
  manifest["out_dir"] = dir.string();
  manifest["jobs"] = jobs;
  json files = json::array();
  for (const auto& [name, path] : emitted.files) {
    files.push_back({{"name", name}, {"sha256", sha256_file(path)}});
  }
  manifest["files"] = std::move(files);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_run(const ConfigFlags& flags, const std::string& out_dir, int jobs_flag) {
  const TrialConfig cfg = trial_config_from_json(resolve_config_json(flags));
  cfg.validate();
  const int jobs = effective_jobs(jobs_flag);

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  const std::vector<TrialResult> results = run_trials(cfg, jobs);

  EmittedFiles emitted;
  write_run_artifacts(dir, cfg, results, emitted);
  write_manifest(dir, cfg, jobs, emitted);

  int failed = 0;
  for (const auto& r : results) failed += r.failed ? 1 : 0;
  std::cout << "run complete: " << results.size() - failed << "/" << results.size()
            << " trials ok, artifacts in " << dir.string() << "\n";
  if (failed > 0) std::cout << "note: " << failed << " trial(s) flagged in summary.json\n";
  return kExitOk;
}

int cmd_landscape(const std::string& run_dir, int trial, int resolution,
                  std::string out_path) {
  const fs::path dir(run_dir);
  const json manifest = load_json_file(dir / "manifest.json");
  const TrialConfig cfg = trial_config_from_json(manifest.at("config"));

  if (!cfg.record_param_history) {
    throw InvalidParameter(
        "this run stored no parameter history; rerun with --record_history to use landscape");
  }
  if (trial < 0 || trial >= cfg.n_trials) {
    throw InvalidParameter("trial index out of range for this run");
  }

  const fs::path history_path = dir / ("history/trial_" + std::to_string(trial) + ".csv");
  std::ifstream history_in(history_path);
  if (!history_in) {
    throw InvalidParameter("missing " + history_path.string() +
                           "; the trial may have failed or history was not recorded");
  }
  const std::vector<Eigen::VectorXd> history = read_history_csv(history_in);

  const std::unique_ptr<Device> dev = make_device(cfg);
  const UnitaryMatrix target = make_target(cfg, trial);
  LossEvaluator eval(*dev, target, cfg.loss);

  const TrajectoryRecord rec = pca_trajectory(
      history, [&eval](const ParameterVector& p) { return eval.value(p); }, resolution);

  if (out_path.empty()) {
    out_path = (dir / ("trajectory_trial_" + std::to_string(trial) + ".json")).string();
  }
  write_text_file(out_path, trajectory_to_json(rec).dump(2) + "\n");
  std::cout << "trajectory written to " << out_path << "\n";
  return kExitOk;
}

int cmd_sweep(const ConfigFlags& flags, const std::string& deltas_text, const std::string& out_dir,
              int jobs_flag) {
  const std::vector<double> deltas = parse_delta_list(deltas_text);
  if (deltas.empty()) throw InvalidParameter("--deltas must list at least one value");

  json j = resolve_config_json(flags);
  if (j.contains("grad") && j["grad"] == "analytic") {
    throw InvalidParameter("sweep varies the fd probe step; --grad analytic is not meaningful");
  }
  j["grad"] = "fd";
  if (!j.contains("delta") || j["delta"].get<double>() <= 0.0) j["delta"] = deltas.front();
  const TrialConfig cfg = trial_config_from_json(j);
  cfg.validate();
  const int jobs = effective_jobs(jobs_flag);

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  const std::vector<DeltaSweepEntry> entries = delta_sweep(cfg, deltas, jobs);

  EmittedFiles emitted;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    TrialConfig entry_cfg = cfg;
    entry_cfg.gradient = GradientMode::forward_difference(entries[k].delta);
    const json summary =
        summary_to_json(entry_cfg, entries[k].results, summarize(entries[k].results));
    const std::string name = "summary_delta" + std::to_string(k) + ".json";
    write_text_file(dir / name, summary.dump(2) + "\n");
    emitted.add(dir, name);
  }
  write_text_file(dir / "sweep.json", sweep_to_json(entries).dump(2) + "\n");
  emitted.add(dir, "sweep.json");
  write_manifest(dir, cfg, jobs, emitted);

  std::cout << "sweep complete over " << entries.size() << " delta value(s), artifacts in "
            << dir.string() << "\n";
  return kExitOk;
}

int cmd_check(int trials, std::uint64_t seed) {
  int failures = 0;
  const auto report = [&failures](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // Gradient checks across architectures, losses and crosstalk settings.
  struct Case {
    std::string name;
    bool clements;
    bool crosstalk;
    LossKind loss;
  };
  const std::vector<Case> cases = {
      {"mplc/frobenius", false, false, LossKind::FrobeniusNormalized},
      {"mplc/phase-insensitive", false, false, LossKind::PhaseInsensitive},
      {"mplc+crosstalk/frobenius", false, true, LossKind::FrobeniusNormalized},
      {"mplc+crosstalk/phase-insensitive", false, true, LossKind::PhaseInsensitive},
      {"clements/frobenius", true, false, LossKind::FrobeniusNormalized},
      {"clements/phase-insensitive", true, false, LossKind::PhaseInsensitive},
      {"clements+crosstalk/frobenius", true, true, LossKind::FrobeniusNormalized},
      {"clements+crosstalk/phase-insensitive", true, true, LossKind::PhaseInsensitive},
  };
  for (const Case& c : cases) {
    std::optional<CrosstalkModel> xt;
    if (c.crosstalk) xt = CrosstalkModel::neighbor_default();
    std::unique_ptr<Device> dev;
    if (c.clements) {
      dev = std::make_unique<ClementsDevice>(4, 4, xt);
    } else {
      dev = std::make_unique<MplcDevice>(
          MplcDevice::sample(4, 5, true, xt, RngStream::labeled(seed, "check/device/" + c.name)));
    }
    RngStream rng = RngStream::labeled(seed, "check/" + c.name);
    const GradCheckReport rep = gradient_check(*dev, c.loss, trials, rng);
    report("gradient " + c.name, rep.max_rel_error < 1e-5,
           "max rel err " + format_double(rep.max_rel_error) + " at param " +
               std::to_string(rep.worst_param));
  }

  // Distance identity: the spectral form agrees with the direct norm.
  {
    RngStream rng = RngStream::labeled(seed, "check/distances");
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const UnitaryMatrix x = haar_random_unitary(8, rng);
      const UnitaryMatrix u = haar_random_unitary(8, rng);
      worst = std::max(worst, std::abs(frobenius_loss(x, u) - spectral_loss(x, u)));
    }
    report("distance identity (frobenius vs spectral)", worst < 1e-10,
           "max |diff| " + format_double(worst));
  }

  // Expected distance between Haar pairs.
  {
    RngStream rng = RngStream::labeled(seed, "check/expected");
    const MeanEstimate est = expected_loss_estimate(8, 500, rng);
    report("expected loss 0.5", std::abs(est.mean - 0.5) < 0.05,
           "mean " + format_double(est.mean));
  }

  // Crosstalk kernel impulse response.
  {
    Eigen::VectorXd impulse(5);
    impulse << 0, 0, 1, 0, 0;
    const Eigen::VectorXd got = apply_crosstalk(impulse, CrosstalkModel::neighbor_default());
    Eigen::VectorXd want(5);
    want << 0.1, 0.5, 1.0, 0.5, 0.1;
    report("crosstalk impulse response", (got - want).cwiseAbs().maxCoeff() == 0.0, "");
  }

  // Determinism of seeded sampling.
  {
    RngStream a(seed, 7), b(seed, 7);
    const ComplexMatrix ma = haar_random_unitary(6, a).matrix();
    const ComplexMatrix mb = haar_random_unitary(6, b).matrix();
    report("seeded sampling determinism", (ma - mb).cwiseAbs().maxCoeff() == 0.0, "");
  }

  std::cout << (failures == 0 ? "all checks passed\n" : "checks FAILED\n");
  return failures == 0 ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and iterative configuration engine for programmable unitary converters"};
  app.require_subcommand(1);

  ConfigFlags run_flags, sweep_flags;
  std::string run_out, sweep_out, sweep_deltas;
  int run_jobs = 0, sweep_jobs = 0;

  CLI::App* run = app.add_subcommand("run", "run one optimization batch");
  add_config_flags(run, run_flags);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--jobs", run_jobs, "max concurrent trials (0 = logical cores)");

  std::string land_dir, land_out;
  int land_trial = 0, land_resolution = 64;
  CLI::App* land = app.add_subcommand("landscape", "PCA trajectory and loss landscape");
  land->add_option("--run", land_dir, "directory produced by `run`")->required();
  land->add_option("--trial", land_trial, "trial index");
  land->add_option("--resolution", land_resolution, "landscape grid resolution");
  land->add_option("--out", land_out, "output JSON path");

  CLI::App* sweep = app.add_subcommand("sweep", "final-loss study across fd resolutions");
  add_config_flags(sweep, sweep_flags);
  sweep->add_option("--deltas", sweep_deltas, "comma list, e.g. 2^-6,2^-9,2^-12")->required();
  sweep->add_option("--out", sweep_out, "output directory")->required();
  sweep->add_option("--jobs", sweep_jobs, "max concurrent trials (0 = logical cores)");

  int check_trials = 5;
  std::uint64_t check_seed = 12345;
  CLI::App* check = app.add_subcommand("check", "gradient and invariant self-test");
  check->add_option("--trials", check_trials, "random triples per gradient check");
  check->add_option("--seed", check_seed, "seed for the self-test streams");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_flags, run_out, run_jobs);
    if (land->parsed()) {
      if (land_resolution < 2) throw InvalidParameter("--resolution must be >= 2");
      return cmd_landscape(land_dir, land_trial, land_resolution, land_out);
    }
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_deltas, sweep_out, sweep_jobs);
    if (check->parsed()) return cmd_check(check_trials, check_seed);
  } catch (const InvalidParameter& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const InvalidDimension& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const NumericFailure& ex) {
    std::cerr << "numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& ex) {
    std::cerr << "failure: " << ex.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
