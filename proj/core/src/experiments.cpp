#include "umesh/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace umesh {

std::string architecture_name(Architecture a) {
  return a == Architecture::Mplc ? "mplc" : "clements";
}

Architecture architecture_from_name(const std::string& name) {
  if (name == "mplc") return Architecture::Mplc;
  if (name == "clements") return Architecture::Clements;
  throw InvalidParameter("unknown architecture '" + name + "' (expected mplc or clements)");
}

void TrialConfig::validate() const {
  if (n_trials < 1) throw InvalidParameter("TrialConfig: n_trials must be >= 1");
  if (n_layers < 1) throw InvalidParameter("TrialConfig: n_layers must be >= 1");
  if (n_modes < 1) throw InvalidParameter("TrialConfig: n_modes must be >= 1");
  if (gradient.kind == GradientMode::Kind::ForwardDifference && !(gradient.delta > 0.0)) {
    throw InvalidParameter("TrialConfig: forward-difference delta must be > 0");
  }
}

std::unique_ptr<Device> make_device(const TrialConfig& cfg) {
  if (cfg.architecture == Architecture::Mplc) {
    return std::make_unique<MplcDevice>(MplcDevice::sample(
        cfg.n_modes, cfg.n_layers, cfg.include_output_phases, cfg.crosstalk,
        RngStream::labeled(cfg.base_seed, "device")));
  }
  return std::make_unique<ClementsDevice>(cfg.n_modes, cfg.n_layers, cfg.crosstalk);
}

UnitaryMatrix make_target(const TrialConfig& cfg, int trial) {
  const std::string label =
      (cfg.vary_target && trial >= 0) ? "target/" + std::to_string(trial) : "target";
  RngStream rng = RngStream::labeled(cfg.base_seed, label);
  return haar_random_unitary(cfg.n_modes, rng);
}

ParameterVector initial_params(const TrialConfig& cfg, const Device& dev, int trial) {
  RngStream rng = RngStream::labeled(cfg.base_seed, "trial/" + std::to_string(trial));
  ParameterVector p(dev.param_count());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    p(j) = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return p;
}

TrialResult run_single_trial(const TrialConfig& cfg, const Device& dev, int trial) {
  TrialResult out;
  out.trial = trial;
  try {
    const UnitaryMatrix target = make_target(cfg, trial);
    LossEvaluator eval(dev, target, cfg.loss);
    const ParameterVector p0 = initial_params(cfg, dev, trial);

    LbfgsConfig opt_cfg = cfg.optimizer;
    opt_cfg.record_param_history = cfg.record_param_history;

    long loss_evals = 0;
    ObjectiveFn fg;
    if (cfg.gradient.is_analytic()) {
      fg = [&eval, &loss_evals](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        ++loss_evals;
        return eval.value_and_gradient(x, grad);
      };
    } else {
      const double delta = cfg.gradient.delta;
      auto value_fn = [&eval, &loss_evals](const ParameterVector& x) {
        ++loss_evals;
        return eval.value(x);
      };
      fg = [value_fn, delta](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
        double base = 0.0;
        grad = approx_gradient_with_value(value_fn, x, delta, base);
        return base;
      };
    }

    out.optim = minimize(fg, p0, opt_cfg);
    out.initial_loss = out.optim.trace.front();
    out.n_loss_evals = loss_evals;
  } catch (const std::exception& ex) {
    out.failed = true;
    out.error = ex.what();
  }
  return out;
}

std::vector<TrialResult> run_trials(const TrialConfig& cfg, int jobs) {
  cfg.validate();
  const std::unique_ptr<Device> dev = make_device(cfg);

  const int n = cfg.n_trials;
  std::vector<TrialResult> results(static_cast<std::size_t>(n));

  int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n);

  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= n) return;
      results[static_cast<std::size_t>(t)] = run_single_trial(cfg, *dev, t);
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return results;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidParameter("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

QuantileSummary summarize(const std::vector<TrialResult>& results) {
  std::vector<const std::vector<double>*> traces;
  for (const TrialResult& r : results) {
    if (!r.failed && !r.optim.trace.empty()) traces.push_back(&r.optim.trace);
  }
  if (traces.empty()) throw InvalidParameter("summarize: no successful trials");

  std::size_t longest = 0;
  for (const auto* t : traces) longest = std::max(longest, t->size());

  QuantileSummary s;
  s.min.resize(longest);
  s.q25.resize(longest);
  s.median.resize(longest);
  s.q75.resize(longest);
  s.max.resize(longest);

  std::vector<double> column(traces.size());
  for (std::size_t it = 0; it < longest; ++it) {
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const auto& tr = *traces[k];
      column[k] = it < tr.size() ? tr[it] : tr.back();  // hold last value
    }
    std::sort(column.begin(), column.end());
    auto interp = [&column](double q) {
      const double h = q * static_cast<double>(column.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      if (lo + 1 >= column.size()) return column.back();
      return column[lo] + (h - static_cast<double>(lo)) * (column[lo + 1] - column[lo]);
    };
    s.min[it] = column.front();
    s.q25[it] = interp(0.25);
    s.median[it] = interp(0.5);
    s.q75[it] = interp(0.75);
    s.max[it] = column.back();
  }
  return s;
}

std::vector<double> final_losses(const std::vector<TrialResult>& results) {
  std::vector<double> finals;
  for (const TrialResult& r : results) {
    if (!r.failed) finals.push_back(r.optim.final_loss);
  }
  return finals;
}

FinalLossStats final_loss_stats(const std::vector<double>& finals) {
  if (finals.empty()) throw InvalidParameter("final_loss_stats: empty sample");
  FinalLossStats st;
  st.min = *std::min_element(finals.begin(), finals.end());
  st.max = *std::max_element(finals.begin(), finals.end());
  st.q25 = quantile(finals, 0.25);
  st.median = quantile(finals, 0.5);
  st.q75 = quantile(finals, 0.75);
  st.mean = 0.0;
  for (double v : finals) st.mean += v;
  st.mean /= static_cast<double>(finals.size());
  return st;
}

TrajectoryRecord pca_trajectory(const std::vector<Eigen::VectorXd>& history,
                                const ObjectiveValueFn& loss, int grid_resolution) {
  if (history.size() < 3) {
    throw InvalidParameter("pca_trajectory: need at least 3 parameter snapshots");
  }
  if (grid_resolution < 2) {
    throw InvalidParameter("pca_trajectory: grid_resolution must be >= 2");
  }
  const Eigen::Index dim = history.front().size();
  const Eigen::Index steps = static_cast<Eigen::Index>(history.size());
  for (const auto& h : history) {
    if (h.size() != dim) throw InvalidParameter("pca_trajectory: inconsistent history dimensions");
  }

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& h : history) mean += h;
  mean /= static_cast<double>(steps);

  Eigen::MatrixXd centered(steps, dim);
  for (Eigen::Index i = 0; i < steps; ++i) {
    centered.row(i) = (history[static_cast<std::size_t>(i)] - mean).transpose();
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double total_var = sigma.squaredNorm();

  TrajectoryRecord rec;
  rec.axis1 = Eigen::VectorXd::Zero(dim);
  rec.axis2 = Eigen::VectorXd::Zero(dim);

  if (total_var == 0.0 || sigma(0) == 0.0) {
    rec.degenerate = true;
    rec.axis1(0) = 1.0;
    if (dim > 1) rec.axis2(1) = 1.0;
  } else {
    rec.axis1 = svd.matrixV().col(0);
    const bool has_second = sigma.size() > 1 && sigma(1) > 1e-12 * sigma(0) && dim > 1;
    if (has_second) {
      rec.axis2 = svd.matrixV().col(1);
    } else {
      rec.degenerate = true;
      // Arbitrary orthonormal complement: start from the coordinate axis
      // least aligned with axis1 and orthogonalize.
      Eigen::Index least = 0;
      rec.axis1.cwiseAbs().minCoeff(&least);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e(least) = 1.0;
      e -= rec.axis1.dot(e) * rec.axis1;
      rec.axis2 = e / e.norm();
    }
    rec.explained_variance[0] = sigma(0) * sigma(0) / total_var;
    if (sigma.size() > 1) rec.explained_variance[1] = sigma(1) * sigma(1) / total_var;
    if (rec.degenerate) rec.explained_variance[1] = 0.0;
  }

  rec.projected_path.reserve(history.size());
  double a_min = 0, a_max = 0, b_min = 0, b_max = 0;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Eigen::VectorXd delta = history[i] - mean;
    const double a = rec.axis1.dot(delta);
    const double b = rec.axis2.dot(delta);
    rec.projected_path.push_back({a, b});
    if (i == 0) {
      a_min = a_max = a;
      b_min = b_max = b;
    } else {
      a_min = std::min(a_min, a);
      a_max = std::max(a_max, a);
      b_min = std::min(b_min, b);
      b_max = std::max(b_max, b);
    }
  }

  const double a_pad = (a_max > a_min) ? 0.2 * (a_max - a_min) : 1e-3;
  const double b_pad = (b_max > b_min) ? 0.2 * (b_max - b_min) : 1e-3;
  rec.axis1_range = {a_min - a_pad, a_max + a_pad};
  rec.axis2_range = {b_min - b_pad, b_max + b_pad};

  const int res = grid_resolution;
  rec.grid.resize(res, res);
  const double da = (rec.axis1_range[1] - rec.axis1_range[0]) / static_cast<double>(res - 1);
  const double db = (rec.axis2_range[1] - rec.axis2_range[0]) / static_cast<double>(res - 1);
  Eigen::VectorXd point(dim);
  for (int i = 0; i < res; ++i) {
    const double a = rec.axis1_range[0] + da * static_cast<double>(i);
    for (int j = 0; j < res; ++j) {
      const double b = rec.axis2_range[0] + db * static_cast<double>(j);
      point = mean + a * rec.axis1 + b * rec.axis2;
      rec.grid(i, j) = std::log10(std::max(loss(point), 1e-300));
    }
  }
  return rec;
}

std::vector<DeltaSweepEntry> delta_sweep(const TrialConfig& cfg, const std::vector<double>& deltas,
                                         int jobs) {
  if (deltas.empty()) throw InvalidParameter("delta_sweep: empty delta list");
  if (cfg.gradient.kind != GradientMode::Kind::ForwardDifference) {
    throw InvalidParameter("delta_sweep: config must use forward-difference gradients");
  }
  std::vector<DeltaSweepEntry> entries;
  entries.reserve(deltas.size());
  for (double delta : deltas) {
    TrialConfig run_cfg = cfg;
    run_cfg.gradient = GradientMode::forward_difference(delta);
    DeltaSweepEntry entry;
    entry.delta = delta;
    entry.results = run_trials(run_cfg, jobs);
    entry.final_losses = final_losses(entry.results);
    entry.stats = final_loss_stats(entry.final_losses);
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace umesh
