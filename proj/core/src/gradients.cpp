#include "umesh/gradients.hpp"

#include <cmath>
#include <numbers>

namespace umesh {

std::vector<double> standard_deltas() {
  std::vector<double> out;
  for (int k : {6, 9, 10, 12, 15, 18}) out.push_back(std::ldexp(1.0, -k));
  return out;
}

// ---------------------------------------------------------------------------
// LossEvaluator

LossEvaluator::LossEvaluator(const Device& dev, UnitaryMatrix target, LossKind kind)
    : device_(&dev), target_(std::move(target)), kind_(kind) {
  if (target_.dim() != dev.n_modes()) {
    throw InvalidDimension("LossEvaluator: target dimension does not match device");
  }
}

double LossEvaluator::loss_of(const ComplexMatrix& x) const {
  const double n = static_cast<double>(device_->n_modes());
  if (kind_ == LossKind::FrobeniusNormalized) {
    return (x - target_.matrix()).squaredNorm() / (4.0 * n);
  }
  const ComplexMatrix m = x * target_.matrix().adjoint();
  double h = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double d = ((i == j) ? 1.0 : 0.0) - std::sqrt(std::norm(m(i, j)));
      h += d * d;
    }
  }
  return h;
}

ComplexMatrix LossEvaluator::cotangent(const ComplexMatrix& x) const {
  const double n = static_cast<double>(device_->n_modes());
  if (kind_ == LossKind::FrobeniusNormalized) {
    // L = ||X - U||^2 / 4N  =>  dL = Re Tr[(X - U)^+ / 2N * dX]
    return (x - target_.matrix()).adjoint() / (2.0 * n);
  }
  // h = sum_ij (delta_ij - |M_ij|)^2 with M = X U^+
  // dh = Re sum_ij W_ij dM_ij, W_ij = -2 (delta_ij - |M_ij|) conj(M_ij)/|M_ij|
  // (the |M_ij| = 0 kink contributes 0, the subgradient choice), and
  // dM = dX U^+ gives dh = Re Tr[(U^+ W^T) dX].
  const ComplexMatrix m = x * target_.matrix().adjoint();
  ComplexMatrix w(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double mag = std::abs(m(i, j));
      if (mag == 0.0) {
        w(i, j) = Complex(0, 0);
      } else {
        const double delta = (i == j) ? 1.0 : 0.0;
        w(i, j) = -2.0 * (delta - mag) * std::conj(m(i, j)) / mag;
      }
    }
  }
  return target_.matrix().adjoint() * w.transpose();
}

double LossEvaluator::value(const ParameterVector& p) {
  const ParameterVector q = device_->effective_phases(p);
  device_->forward_into(q, fwd_);
  return loss_of(fwd_.x);
}

double LossEvaluator::value_and_gradient(const ParameterVector& p, ParameterVector& grad) {
  const Device& dev = *device_;
  const Eigen::Index n = dev.n_modes();
  const ParameterVector q = dev.effective_phases(p);
  const auto& stages = dev.stages();

  // Prefix sweep: store P_k (the product of all stages before k) for every
  // parameterized stage, accumulating the full transfer matrix as we go.
  std::size_t n_param_stages = 0;
  for (const Stage& st : stages) {
    if (st.parameterized()) ++n_param_stages;
  }
  prefixes_.resize(n_param_stages);

  fwd_.x = ComplexMatrix::Identity(n, n);
  std::size_t slot = 0;
  for (const Stage& st : stages) {
    if (st.parameterized()) prefixes_[slot++] = fwd_.x;
    switch (st.kind) {
      case Stage::Kind::PhaseArray:
        for (Eigen::Index r = 0; r < n; ++r) {
          fwd_.x.row(r) *= std::polar(1.0, q(st.param_offset + r));
        }
        break;
      case Stage::Kind::Mixer:
        fwd_.tmp.noalias() = dev.mixer(st.mixer_index) * fwd_.x;
        fwd_.x.swap(fwd_.tmp);
        break;
      case Stage::Kind::MziLayer:
        for (Eigen::Index t = 0; t < st.n_mzi; ++t) {
          const Eigen::Index a = st.first_mode + 2 * t;
          const Eigen::Matrix2cd mz = mzi_transfer(q(st.param_offset + 2 * t),
                                                   q(st.param_offset + 2 * t + 1));
          for (Eigen::Index c = 0; c < n; ++c) {
            const Complex top = fwd_.x(a, c);
            const Complex bot = fwd_.x(a + 1, c);
            fwd_.x(a, c) = mz(0, 0) * top + mz(0, 1) * bot;
            fwd_.x(a + 1, c) = mz(1, 0) * top + mz(1, 1) * bot;
          }
        }
        break;
    }
  }

  const double value = loss_of(fwd_.x);

  // Suffix sweep: W_k = C * (product of all stages after k). For each
  // parameterized stage contract G = P_k W_k against the stage derivative;
  // only O(N) entries of G per parameter are needed.
  suffix_ = cotangent(fwd_.x);
  ParameterVector grad_q = ParameterVector::Zero(dev.param_count());
  slot = n_param_stages;
  for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
    const Stage& st = *it;
    if (st.parameterized()) {
      const ComplexMatrix& pre = prefixes_[--slot];
      if (st.kind == Stage::Kind::PhaseArray) {
        // dM/dtheta_j = i e^{i theta_j} E_jj: needs only G_jj.
        for (Eigen::Index jj = 0; jj < n; ++jj) {
          const Complex g_jj = (pre.row(jj) * suffix_.col(jj)).value();
          const Complex rot = std::polar(1.0, q(st.param_offset + jj));
          grad_q(st.param_offset + jj) = -(rot * g_jj).imag();  // Re[i z] = -Im[z]
        }
      } else {
        for (Eigen::Index t = 0; t < st.n_mzi; ++t) {
          const Eigen::Index a = st.first_mode + 2 * t;
          const double th = q(st.param_offset + 2 * t);
          const double ph = q(st.param_offset + 2 * t + 1);
          Eigen::Matrix2cd gblk;
          for (Eigen::Index r = 0; r < 2; ++r) {
            for (Eigen::Index c = 0; c < 2; ++c) {
              gblk(r, c) = (pre.row(a + r) * suffix_.col(a + c)).value();
            }
          }
          grad_q(st.param_offset + 2 * t) = (gblk * mzi_transfer_dtheta(th, ph)).trace().real();
          grad_q(st.param_offset + 2 * t + 1) = (gblk * mzi_transfer_dphi(th, ph)).trace().real();
        }
      }
    }

    // W <- W * M_k
    switch (st.kind) {
      case Stage::Kind::PhaseArray:
        for (Eigen::Index c = 0; c < n; ++c) {
          suffix_.col(c) *= std::polar(1.0, q(st.param_offset + c));
        }
        break;
      case Stage::Kind::Mixer:
        tmp_.noalias() = suffix_ * dev.mixer(st.mixer_index);
        suffix_.swap(tmp_);
        break;
      case Stage::Kind::MziLayer:
        for (Eigen::Index t = 0; t < st.n_mzi; ++t) {
          const Eigen::Index a = st.first_mode + 2 * t;
          const Eigen::Matrix2cd mz = mzi_transfer(q(st.param_offset + 2 * t),
                                                   q(st.param_offset + 2 * t + 1));
          for (Eigen::Index r = 0; r < n; ++r) {
            const Complex left = suffix_(r, a);
            const Complex right = suffix_(r, a + 1);
            suffix_(r, a) = left * mz(0, 0) + right * mz(1, 0);
            suffix_(r, a + 1) = left * mz(0, 1) + right * mz(1, 1);
          }
        }
        break;
    }
  }

  grad = dev.pullback_phase_gradient(grad_q);
  return value;
}

// ---------------------------------------------------------------------------
// Free functions

ParameterVector analytic_gradient(const Device& dev, const ParameterVector& p,
                                  const UnitaryMatrix& u, LossKind kind) {
  LossEvaluator eval(dev, u, kind);
  ParameterVector grad(dev.param_count());
  eval.value_and_gradient(p, grad);
  return grad;
}

ParameterVector approx_gradient_with_value(const ObjectiveValueFn& objective,
                                           const ParameterVector& p, double delta,
                                           double& base_out) {
  if (!(delta > 0.0)) throw InvalidParameter("approx_gradient: delta must be > 0");
  base_out = objective(p);
  ParameterVector grad(p.size());
  ParameterVector probe = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    probe(j) = p(j) + delta;
    grad(j) = (objective(probe) - base_out) / delta;
    probe(j) = p(j);
  }
  return grad;
}

ParameterVector approx_gradient(const ObjectiveValueFn& objective, const ParameterVector& p,
                                double delta) {
  double base = 0.0;
  return approx_gradient_with_value(objective, p, delta, base);
}

ParameterVector central_difference_gradient(const ObjectiveValueFn& objective,
                                            const ParameterVector& p, double h) {
  if (!(h > 0.0)) throw InvalidParameter("central_difference_gradient: h must be > 0");
  ParameterVector grad(p.size());
  ParameterVector probe = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    probe(j) = p(j) + h;
    const double fp = objective(probe);
    probe(j) = p(j) - h;
    const double fm = objective(probe);
    probe(j) = p(j);
    grad(j) = (fp - fm) / (2.0 * h);
  }
  return grad;
}

GradCheckReport gradient_check(const Device& dev, LossKind kind, int trials, RngStream& rng) {
  if (trials < 1) throw InvalidParameter("gradient_check: trials must be >= 1");
  GradCheckReport report;
  report.trials = trials;
  const Eigen::Index dim = dev.param_count();

  for (int trial = 0; trial < trials; ++trial) {
    const UnitaryMatrix target = haar_random_unitary(dev.n_modes(), rng);
    ParameterVector p(dim);
    for (Eigen::Index j = 0; j < dim; ++j) p(j) = rng.uniform(0.0, 2.0 * std::numbers::pi);

    LossEvaluator eval(dev, target, kind);
    ParameterVector analytic(dim);
    eval.value_and_gradient(p, analytic);
    const ParameterVector fd = central_difference_gradient(
        [&eval](const ParameterVector& x) { return eval.value(x); }, p, 1e-6);

    for (Eigen::Index j = 0; j < dim; ++j) {
      const double denom = std::max({std::abs(analytic(j)), std::abs(fd(j)), 1e-4});
      const double rel = std::abs(analytic(j) - fd(j)) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = j;
        report.worst_trial = trial;
      }
    }
  }
  return report;
}

}  // namespace umesh
