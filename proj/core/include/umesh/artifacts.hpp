#pragma once

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

#include "umesh/experiments.hpp"

namespace umesh {

inline constexpr int kRunSchemaVersion = 1;

/// Round-trip-exact decimal formatting ("%.17g"); keeps CSV output
/// byte-stable across reruns.
std::string format_double(double v);

std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& name);
std::string gradient_kind_name(GradientMode::Kind k);
GradientMode::Kind gradient_kind_from_name(const std::string& name);

/// Header `trial,iteration,loss`, one row per accepted iterate (iteration 0
/// is the initial point). Failed trials contribute no rows.
void write_traces_csv(std::ostream& os, const std::vector<TrialResult>& results);
std::string traces_csv_string(const std::vector<TrialResult>& results);

/// One row per snapshot, comma-separated parameter values.
void write_history_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& history);
std::vector<Eigen::VectorXd> read_history_csv(std::istream& is);

/// Flat experiment config, shared between config files, flag overrides and
/// the config echo in summaries/manifests. The crosstalk field is false or
/// the kernel taps as [[offset, coefficient], ...] (true selects the
/// default kernel on input and echoes as taps).
nlohmann::json trial_config_to_json(const TrialConfig& cfg);
TrialConfig trial_config_from_json(const nlohmann::json& j);

nlohmann::json summary_to_json(const TrialConfig& cfg, const std::vector<TrialResult>& results,
                               const QuantileSummary& summary);
nlohmann::json trajectory_to_json(const TrajectoryRecord& rec);
nlohmann::json sweep_to_json(const std::vector<DeltaSweepEntry>& entries);

}  // namespace umesh
