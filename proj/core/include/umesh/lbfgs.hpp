#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "umesh/errors.hpp"

namespace umesh {

struct LbfgsConfig {
  int history_size = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  /// Infinity-norm gradient threshold. Far below usual defaults because the
  /// experiments track losses down to ~1e-11.
  double grad_tol = 1e-12;
  long max_iterations = 10000;
  int max_line_search_steps = 40;
  /// When true, snapshots the parameter vector at the initial point and at
  /// every history_stride-th accepted iterate (plus the final one).
  bool record_param_history = false;
  long history_stride = 1;
};

enum class Termination { GradTol, MaxIters, LineSearchFailure };

std::string termination_name(Termination t);

struct OptimResult {
  Eigen::VectorXd final_params;
  double final_loss = 0.0;
  /// Loss at the initial point and after every accepted iterate; accepted
  /// steps strictly decrease the objective, so this is non-increasing.
  std::vector<double> trace;
  Termination termination = Termination::MaxIters;
  /// Number of (value, gradient) evaluations, line search included.
  long n_objective_evals = 0;
  long n_iterations = 0;
  std::vector<Eigen::VectorXd> param_history;
};

/// Objective callable: fills grad with d f / d x and returns f(x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// L-BFGS with the standard two-loop recursion and a strong-Wolfe line
/// search (cubic interpolation, initial step 1). Deterministic: identical
/// (fg, p0, cfg) produce bit-identical results. Curvature pairs with
/// s^T y <= 1e-14 ||s|| ||y|| are skipped.
///
/// Throws NumericFailure (with the offending iterate) when the objective or
/// gradient turns non-finite.
OptimResult minimize(const ObjectiveFn& fg, const Eigen::VectorXd& p0, const LbfgsConfig& cfg);

}  // namespace umesh
