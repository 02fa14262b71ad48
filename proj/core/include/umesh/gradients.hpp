#pragma once

#include <functional>

#include "umesh/devices.hpp"
#include "umesh/distances.hpp"

namespace umesh {

struct GradientMode {
  enum class Kind { Analytic, ForwardDifference };

  Kind kind = Kind::Analytic;
  double delta = 0.0;

  static GradientMode analytic() { return {Kind::Analytic, 0.0}; }
  static GradientMode forward_difference(double delta) {
    if (!(delta > 0.0)) throw InvalidParameter("GradientMode: delta must be > 0");
    return {Kind::ForwardDifference, delta};
  }
  bool is_analytic() const { return kind == Kind::Analytic; }
};

/// The finite-difference resolutions studied in the experiments, 2^-k for
/// k in {6, 9, 10, 12, 15, 18}.
std::vector<double> standard_deltas();

using ObjectiveValueFn = std::function<double(const ParameterVector&)>;

/// Loss of a parameterized device against a fixed target, with closed-form
/// derivatives w.r.t. every phase. Holds scratch buffers; use one instance
/// per thread.
///
/// The gradient runs one prefix and one suffix sweep over the device stages
/// (O(m N^3) total), contracting the cotangent of the loss against the
/// derivative of each stage; crosstalk is chained through the transposed
/// kernel map.
class LossEvaluator {
public:
  LossEvaluator(const Device& dev, UnitaryMatrix target, LossKind kind);

  double value(const ParameterVector& p);
  /// Returns the loss and fills grad with d(loss)/dp.
  double value_and_gradient(const ParameterVector& p, ParameterVector& grad);

  Eigen::Index dim() const { return device_->param_count(); }
  const Device& device() const { return *device_; }
  const UnitaryMatrix& target() const { return target_; }
  LossKind loss_kind() const { return kind_; }

private:
  double loss_of(const ComplexMatrix& x) const;
  /// Cotangent C with d(loss) = Re Tr[C dX], evaluated at x.
  ComplexMatrix cotangent(const ComplexMatrix& x) const;

  const Device* device_;
  UnitaryMatrix target_;
  LossKind kind_;

  Device::Workspace fwd_;
  std::vector<ComplexMatrix> prefixes_;  // one per parameterized stage
  ComplexMatrix suffix_;
  ComplexMatrix tmp_;
};

/// d(loss)/dp at p for target u. One-shot wrapper around LossEvaluator.
/// Matches central finite differences with step 1e-6 to componentwise
/// relative error < 1e-5 (1e-9 absolute floor near zero).
ParameterVector analytic_gradient(const Device& dev, const ParameterVector& p,
                                  const UnitaryMatrix& u, LossKind kind);

/// Forward-difference gradient: component j = (f(p + delta e_j) - f(p)) / delta.
/// Performs exactly dim + 1 objective evaluations (the base value is shared).
ParameterVector approx_gradient(const ObjectiveValueFn& objective, const ParameterVector& p,
                                double delta);

/// Same, returning the shared base value f(p) through base_out.
ParameterVector approx_gradient_with_value(const ObjectiveValueFn& objective,
                                           const ParameterVector& p, double delta,
                                           double& base_out);

/// Central differences (f(p + h e_j) - f(p - h e_j)) / 2h; reference used by
/// gradient_check. Uses only objective values, never the analytic path.
ParameterVector central_difference_gradient(const ObjectiveValueFn& objective,
                                            const ParameterVector& p, double h);

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_param = -1;
  int worst_trial = -1;
  int trials = 0;
};

/// Compares analytic and central-difference gradients on random
/// (parameters, target) pairs. The relative error of component k is
/// |a_k - fd_k| / max(|a_k|, |fd_k|, 1e-4), so errors below 1e-9 pass the
/// 1e-5 threshold regardless of gradient magnitude.
GradCheckReport gradient_check(const Device& dev, LossKind kind, int trials, RngStream& rng);

}  // namespace umesh
