#include "umesh/artifacts.hpp"

#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>

#include "umesh/device_io.hpp"

namespace umesh {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string loss_kind_name(LossKind k) {
  return k == LossKind::FrobeniusNormalized ? "frobenius" : "phase-insensitive";
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "frobenius") return LossKind::FrobeniusNormalized;
  if (name == "phase-insensitive") return LossKind::PhaseInsensitive;
  throw InvalidParameter("unknown loss '" + name + "' (expected frobenius or phase-insensitive)");
}

std::string gradient_kind_name(GradientMode::Kind k) {
  return k == GradientMode::Kind::Analytic ? "analytic" : "fd";
}

GradientMode::Kind gradient_kind_from_name(const std::string& name) {
  if (name == "analytic") return GradientMode::Kind::Analytic;
  if (name == "fd") return GradientMode::Kind::ForwardDifference;
  throw InvalidParameter("unknown gradient mode '" + name + "' (expected analytic or fd)");
}

void write_traces_csv(std::ostream& os, const std::vector<TrialResult>& results) {
  os << "trial,iteration,loss\n";
  for (const TrialResult& r : results) {
    if (r.failed) continue;
    for (std::size_t it = 0; it < r.optim.trace.size(); ++it) {
      os << r.trial << ',' << it << ',' << format_double(r.optim.trace[it]) << '\n';
    }
  }
}

std::string traces_csv_string(const std::vector<TrialResult>& results) {
  std::ostringstream os;
  write_traces_csv(os, results);
  return os.str();
}

void write_history_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& history) {
  for (const Eigen::VectorXd& p : history) {
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (j > 0) os << ',';
      os << format_double(p(j));
    }
    os << '\n';
  }
}

std::vector<Eigen::VectorXd> read_history_csv(std::istream& is) {
  std::vector<Eigen::VectorXd> history;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::string tok = line.substr(pos, comma == std::string::npos ? comma : comma - pos);
      row.push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    Eigen::VectorXd p(static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j) p(static_cast<Eigen::Index>(j)) = row[j];
    history.push_back(std::move(p));
  }
  return history;
}

json trial_config_to_json(const TrialConfig& cfg) {
  json j;
  j["arch"] = architecture_name(cfg.architecture);
  j["n"] = cfg.n_modes;
  j["m"] = cfg.n_layers;
  j["loss"] = loss_kind_name(cfg.loss);
  j["grad"] = gradient_kind_name(cfg.gradient.kind);
  j["delta"] = cfg.gradient.kind == GradientMode::Kind::ForwardDifference ? cfg.gradient.delta : 0.0;
  j["crosstalk"] = cfg.crosstalk ? crosstalk_to_json(*cfg.crosstalk) : json(false);
  j["trials"] = cfg.n_trials;
  j["seed"] = cfg.base_seed;
  j["include_output_phases"] = cfg.include_output_phases;
  j["vary_target"] = cfg.vary_target;
  j["record_history"] = cfg.record_param_history;
  j["history_stride"] = cfg.optimizer.history_stride;
  j["max_iterations"] = cfg.optimizer.max_iterations;
  j["grad_tol"] = cfg.optimizer.grad_tol;
  j["lbfgs_history"] = cfg.optimizer.history_size;
  return j;
}

TrialConfig trial_config_from_json(const json& j) {
  TrialConfig cfg;
  static const std::map<std::string, int> known = {
      {"arch", 0},       {"n", 0},     {"m", 0},          {"loss", 0},
      {"grad", 0},       {"delta", 0}, {"crosstalk", 0},  {"trials", 0},
      {"seed", 0},       {"include_output_phases", 0},    {"vary_target", 0},
      {"record_history", 0},           {"history_stride", 0},
      {"max_iterations", 0},           {"grad_tol", 0},   {"lbfgs_history", 0}};
  for (const auto& item : j.items()) {
    if (known.find(item.key()) == known.end()) {
      throw InvalidParameter("config: unknown field '" + item.key() + "'");
    }
  }

  if (j.contains("arch")) cfg.architecture = architecture_from_name(j["arch"].get<std::string>());
  if (j.contains("n")) cfg.n_modes = j["n"].get<Eigen::Index>();
  if (j.contains("m")) cfg.n_layers = j["m"].get<Eigen::Index>();
  if (j.contains("loss")) cfg.loss = loss_kind_from_name(j["loss"].get<std::string>());

  GradientMode::Kind gk = GradientMode::Kind::Analytic;
  if (j.contains("grad")) gk = gradient_kind_from_name(j["grad"].get<std::string>());
  if (gk == GradientMode::Kind::ForwardDifference) {
    if (!j.contains("delta")) {
      throw InvalidParameter("config: grad=fd requires a delta field");
    }
    cfg.gradient = GradientMode::forward_difference(j["delta"].get<double>());
  } else {
    cfg.gradient = GradientMode::analytic();
  }

  if (j.contains("crosstalk")) {
    const auto& x = j["crosstalk"];
    if (x.is_boolean()) {
      if (x.get<bool>()) cfg.crosstalk = CrosstalkModel::neighbor_default();
    } else if (x.is_array()) {
      cfg.crosstalk = crosstalk_from_json(x);
    } else if (!x.is_null()) {
      throw InvalidParameter("config: crosstalk must be a bool or a kernel tap array");
    }
  }

  if (j.contains("trials")) cfg.n_trials = j["trials"].get<int>();
  if (j.contains("seed")) cfg.base_seed = j["seed"].get<std::uint64_t>();
  if (j.contains("include_output_phases")) {
    cfg.include_output_phases = j["include_output_phases"].get<bool>();
  }
  if (j.contains("vary_target")) cfg.vary_target = j["vary_target"].get<bool>();
  if (j.contains("record_history")) cfg.record_param_history = j["record_history"].get<bool>();
  if (j.contains("history_stride")) cfg.optimizer.history_stride = j["history_stride"].get<long>();
  if (j.contains("max_iterations")) cfg.optimizer.max_iterations = j["max_iterations"].get<long>();
  if (j.contains("grad_tol")) cfg.optimizer.grad_tol = j["grad_tol"].get<double>();
  if (j.contains("lbfgs_history")) cfg.optimizer.history_size = j["lbfgs_history"].get<int>();
  return cfg;
}

namespace {

json stats_to_json(const FinalLossStats& st) {
  return json{{"min", st.min},   {"q25", st.q25}, {"median", st.median},
              {"q75", st.q75},   {"max", st.max}, {"mean", st.mean}};
}

}  // namespace

json summary_to_json(const TrialConfig& cfg, const std::vector<TrialResult>& results,
                     const QuantileSummary& summary) {
  json j;
  j["schema_version"] = kRunSchemaVersion;
  j["config"] = trial_config_to_json(cfg);

  int failed = 0;
  std::map<std::string, int> term_hist;
  json trials = json::array();
  std::vector<double> evals;
  double initial_sum = 0.0;
  int ok_count = 0;
  for (const TrialResult& r : results) {
    json t;
    t["trial"] = r.trial;
    t["failed"] = r.failed;
    if (r.failed) {
      ++failed;
      t["error"] = r.error;
    } else {
      t["final_loss"] = r.optim.final_loss;
      t["initial_loss"] = r.initial_loss;
      t["iterations"] = r.optim.n_iterations;
      t["n_evals"] = r.n_loss_evals;
      t["termination"] = termination_name(r.optim.termination);
      ++term_hist[termination_name(r.optim.termination)];
      evals.push_back(static_cast<double>(r.n_loss_evals));
      initial_sum += r.initial_loss;
      ++ok_count;
    }
    trials.push_back(std::move(t));
  }
  term_hist["failed"] = failed;

  j["n_trials"] = results.size();
  j["n_failed"] = failed;
  j["per_iteration"] = {{"min", summary.min},
                        {"q25", summary.q25},
                        {"median", summary.median},
                        {"q75", summary.q75},
                        {"max", summary.max}};

  const std::vector<double> finals = final_losses(results);
  if (!finals.empty()) {
    j["final_loss"] = stats_to_json(final_loss_stats(finals));
    if (cfg.loss == LossKind::PhaseInsensitive) {
      // Raw h_U values; report the 4N-normalized stats alongside for
      // comparison against the Frobenius cost.
      std::vector<double> normalized = finals;
      const double scale = 4.0 * static_cast<double>(cfg.n_modes);
      for (double& v : normalized) v /= scale;
      j["final_loss_normalized"] = stats_to_json(final_loss_stats(normalized));
    }
    j["initial_loss"] = {{"mean", initial_sum / static_cast<double>(ok_count)}};
  }
  if (!evals.empty()) {
    double total = 0.0;
    for (double e : evals) total += e;
    j["n_evals"] = {{"min", *std::min_element(evals.begin(), evals.end())},
                    {"median", quantile(evals, 0.5)},
                    {"max", *std::max_element(evals.begin(), evals.end())},
                    {"total", total}};
  }
  j["termination"] = term_hist;
  j["trials"] = std::move(trials);
  return j;
}

json trajectory_to_json(const TrajectoryRecord& rec) {
  json j;
  j["schema_version"] = kRunSchemaVersion;
  j["axes"] = json::array();
  for (const Eigen::VectorXd* axis : {&rec.axis1, &rec.axis2}) {
    json a = json::array();
    for (Eigen::Index i = 0; i < axis->size(); ++i) a.push_back((*axis)(i));
    j["axes"].push_back(std::move(a));
  }
  json path = json::array();
  for (const auto& pt : rec.projected_path) path.push_back(json::array({pt[0], pt[1]}));
  j["projected_path"] = std::move(path);
  j["explained_variance"] = json::array({rec.explained_variance[0], rec.explained_variance[1]});
  j["axis1_range"] = json::array({rec.axis1_range[0], rec.axis1_range[1]});
  j["axis2_range"] = json::array({rec.axis2_range[0], rec.axis2_range[1]});
  j["grid_resolution"] = rec.grid.rows();
  json grid = json::array();  // row-major: rows walk axis1
  for (Eigen::Index i = 0; i < rec.grid.rows(); ++i) {
    for (Eigen::Index k = 0; k < rec.grid.cols(); ++k) grid.push_back(rec.grid(i, k));
  }
  j["grid"] = std::move(grid);
  j["degenerate"] = rec.degenerate;
  return j;
}

json sweep_to_json(const std::vector<DeltaSweepEntry>& entries) {
  json j;
  j["schema_version"] = kRunSchemaVersion;
  json list = json::array();
  for (const DeltaSweepEntry& e : entries) {
    json item;
    item["delta"] = e.delta;
    item["final_loss"] = stats_to_json(e.stats);
    item["final_losses"] = e.final_losses;
    list.push_back(std::move(item));
  }
  j["entries"] = std::move(list);
  return j;
}

}  // namespace umesh
