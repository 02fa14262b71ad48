#include "umesh/distances.hpp"

#include <cmath>

namespace umesh {

namespace {

void check_same_dim(const UnitaryMatrix& x, const UnitaryMatrix& u, const char* op) {
  if (x.dim() != u.dim()) {
    throw InvalidDimension(std::string(op) + ": operands have different dimensions");
  }
}

}  // namespace

double frobenius_loss(const UnitaryMatrix& x, const UnitaryMatrix& u) {
  check_same_dim(x, u, "frobenius_loss");
  const double n = static_cast<double>(x.dim());
  return (x.matrix() - u.matrix()).squaredNorm() / (4.0 * n);
}

double spectral_loss(const UnitaryMatrix& x, const UnitaryMatrix& u) {
  check_same_dim(x, u, "spectral_loss");
  const double n = static_cast<double>(x.dim());
  const std::vector<double> angles = eigenangles(UnitaryMatrix::trusted(u.matrix().adjoint() * x.matrix()));
  double cos_sum = 0.0;
  for (double theta : angles) cos_sum += std::cos(theta);
  return (2.0 * n - 2.0 * cos_sum) / (4.0 * n);
}

double phase_insensitive_loss(const UnitaryMatrix& x, const UnitaryMatrix& u) {
  check_same_dim(x, u, "phase_insensitive_loss");
  const ComplexMatrix m = x.matrix() * u.matrix().adjoint();
  double h = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double a_ij = std::norm(m(i, j));  // intensity |[XU^+]_ij|^2
      const double delta = (i == j) ? 1.0 : 0.0;
      const double d = delta - std::sqrt(a_ij);
      h += d * d;
    }
  }
  return h;
}

double loss_value(LossKind kind, const UnitaryMatrix& x, const UnitaryMatrix& u) {
  switch (kind) {
    case LossKind::FrobeniusNormalized: return frobenius_loss(x, u);
    case LossKind::PhaseInsensitive: return phase_insensitive_loss(x, u);
  }
  throw InvalidParameter("loss_value: unknown LossKind");
}

MeanEstimate expected_loss_estimate(Eigen::Index n, long samples, RngStream& rng) {
  if (samples < 1) {
    throw InvalidParameter("expected_loss_estimate: samples must be >= 1");
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long s = 0; s < samples; ++s) {
    const UnitaryMatrix x = haar_random_unitary(n, rng);
    const UnitaryMatrix u = haar_random_unitary(n, rng);
    const double v = frobenius_loss(x, u);
    sum += v;
    sum_sq += v * v;
  }
  MeanEstimate est;
  est.samples = samples;
  est.mean = sum / static_cast<double>(samples);
  if (samples > 1) {
    const double var = (sum_sq - sum * sum / static_cast<double>(samples)) /
                       static_cast<double>(samples - 1);
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(samples));
  }
  return est;
}

}  // namespace umesh
