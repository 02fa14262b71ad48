#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "umesh/devices.hpp"
#include "umesh/distances.hpp"
#include "umesh/gradients.hpp"
#include "umesh/lbfgs.hpp"

namespace umesh {

enum class Architecture { Mplc, Clements };

std::string architecture_name(Architecture a);
Architecture architecture_from_name(const std::string& name);

/// One batch experiment: a shared device and target, n_trials optimizations
/// from independent uniform [0, 2pi) initializations.
///
/// Streams derived from base_seed: "device" (MPLC mixers), "target" (shared
/// Haar target; "target/<t>" per trial when vary_target), "trial/<t>"
/// (initial parameters of trial t).
struct TrialConfig {
  Architecture architecture = Architecture::Mplc;
  Eigen::Index n_modes = 8;
  Eigen::Index n_layers = 9;
  LossKind loss = LossKind::FrobeniusNormalized;
  GradientMode gradient = GradientMode::analytic();
  std::optional<CrosstalkModel> crosstalk;
  int n_trials = 64;
  std::uint64_t base_seed = 0;
  LbfgsConfig optimizer;
  bool record_param_history = false;
  bool include_output_phases = true;  // MPLC: false removes the final array
  bool vary_target = false;

  void validate() const;
};

struct TrialResult {
  int trial = 0;
  OptimResult optim;
  double initial_loss = 0.0;
  /// Underlying distance evaluations (for forward differences this is
  /// (dim + 1) per optimizer call).
  long n_loss_evals = 0;
  bool failed = false;
  std::string error;
};

std::unique_ptr<Device> make_device(const TrialConfig& cfg);
/// trial < 0 (or vary_target false) selects the shared target.
UnitaryMatrix make_target(const TrialConfig& cfg, int trial);
ParameterVector initial_params(const TrialConfig& cfg, const Device& dev, int trial);

TrialResult run_single_trial(const TrialConfig& cfg, const Device& dev, int trial);

/// Runs all trials on a small work pool (jobs <= 0 means all logical cores).
/// Results are ordered by trial index; per-trial aborts are flagged, never
/// fatal to the batch. Deterministic given base_seed.
std::vector<TrialResult> run_trials(const TrialConfig& cfg, int jobs = 0);

/// Per-iteration order statistics across trials. Traces shorter than the
/// longest are extended by holding their final value; quantiles interpolate
/// linearly between order statistics.
struct QuantileSummary {
  std::vector<double> min, q25, median, q75, max;
};

QuantileSummary summarize(const std::vector<TrialResult>& results);

/// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::vector<double> values, double q);

struct FinalLossStats {
  double min = 0, q25 = 0, median = 0, q75 = 0, max = 0, mean = 0;
};
FinalLossStats final_loss_stats(const std::vector<double>& finals);
std::vector<double> final_losses(const std::vector<TrialResult>& results);

/// Top-2 PCA projection of an optimization path plus the log10 loss
/// landscape on a grid spanning the projected path (padded 20% per side),
/// anchored at the mean parameter vector.
struct TrajectoryRecord {
  Eigen::VectorXd axis1, axis2;  // orthonormal directions in parameter space
  std::vector<std::array<double, 2>> projected_path;
  std::array<double, 2> explained_variance{0.0, 0.0};
  std::array<double, 2> axis1_range{0.0, 0.0};
  std::array<double, 2> axis2_range{0.0, 0.0};
  Eigen::MatrixXd grid;  // grid(i, j) = log10 loss at (axis1_i, axis2_j)
  bool degenerate = false;
};

TrajectoryRecord pca_trajectory(const std::vector<Eigen::VectorXd>& history,
                                const ObjectiveValueFn& loss, int grid_resolution);

struct DeltaSweepEntry {
  double delta = 0.0;
  FinalLossStats stats;
  std::vector<double> final_losses;
  std::vector<TrialResult> results;
};

/// run_trials once per delta with forward-difference gradients.
std::vector<DeltaSweepEntry> delta_sweep(const TrialConfig& cfg, const std::vector<double>& deltas,
                                         int jobs = 0);

}  // namespace umesh
