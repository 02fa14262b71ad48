#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "umesh/errors.hpp"

namespace umesh {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// ‖M†M − I‖_F, zero for an exactly unitary matrix.
double unitarity_defect(const ComplexMatrix& m);

bool all_finite(const ComplexMatrix& m);

/// Square complex matrix with a checked unitarity invariant:
/// ‖M†M − I‖_F <= 1e-10 * N.
class UnitaryMatrix {
public:
  /// Validates squareness, finiteness and the unitarity bound.
  explicit UnitaryMatrix(ComplexMatrix m);

  /// Wraps a matrix known unitary by construction (e.g. a product of
  /// unitaries). Skips the O(N^3) defect check.
  static UnitaryMatrix trusted(ComplexMatrix m);

  const ComplexMatrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }

  UnitaryMatrix adjoint() const { return trusted(m_.adjoint()); }

private:
  struct trusted_tag {};
  UnitaryMatrix(ComplexMatrix m, trusted_tag) : m_(std::move(m)) {}

  ComplexMatrix m_;
};

/// FNV-1a hash of a label, used to derive named sub-streams from a base seed.
std::uint64_t stream_label_hash(std::string_view label);

/// Counter-free reproducible RNG stream. A (seed, stream_id) pair fully
/// determines the sample sequence; copies advance independently.
///
/// Uniform and Gaussian variates are generated from explicit formulas on the
/// raw 64-bit output (never via std::*_distribution, whose sequences are
/// implementation-defined).
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  /// Stream addressed by (seed, hash(label)).
  static RngStream labeled(std::uint64_t seed, std::string_view label);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal N(0, 1) via Box-Muller.
  double normal();
  /// Standard complex normal CN(0, 1): E|z|^2 = 1.
  Complex complex_normal();

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// Haar-distributed random unitary on U(n): QR of an i.i.d. complex Gaussian
/// matrix with the R-diagonal phase correction.
UnitaryMatrix haar_random_unitary(Eigen::Index n, RngStream& rng);

/// Arguments of the eigenvalues of u, each in (-pi, pi], sorted ascending
/// (ties keep the eigensolver's order).
std::vector<double> eigenangles(const UnitaryMatrix& u);

/// Checked matrix product.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace umesh
