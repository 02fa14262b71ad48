#include "umesh/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace umesh {

double unitarity_defect(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    throw InvalidDimension("unitarity_defect: matrix must be square");
  }
  ComplexMatrix gram = m.adjoint() * m;
  gram.diagonal().array() -= 1.0;
  return gram.norm();
}

bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const Complex& z = m(r, c);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
  }
  return true;
}

UnitaryMatrix::UnitaryMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) {
    throw InvalidDimension("UnitaryMatrix: matrix must be square and non-empty");
  }
  if (!all_finite(m_)) {
    throw InvariantViolation("UnitaryMatrix: non-finite entries");
  }
  const double defect = unitarity_defect(m_);
  const double bound = 1e-10 * static_cast<double>(m_.rows());
  if (defect > bound) {
    throw InvariantViolation("UnitaryMatrix: unitarity defect " + std::to_string(defect) +
                             " exceeds bound " + std::to_string(bound));
  }
}

UnitaryMatrix UnitaryMatrix::trusted(ComplexMatrix m) {
  return UnitaryMatrix(std::move(m), trusted_tag{});
}

std::uint64_t stream_label_hash(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// splitmix64 finalizer; combines (seed, stream_id) into one engine seed.
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix64(seed, stream_id)) {}

RngStream RngStream::labeled(std::uint64_t seed, std::string_view label) {
  return RngStream(seed, stream_label_hash(label));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Complex RngStream::complex_normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return Complex(r * std::cos(phi), r * std::sin(phi));
}

UnitaryMatrix haar_random_unitary(Eigen::Index n, RngStream& rng) {
  if (n < 1) {
    throw InvalidDimension("haar_random_unitary: n must be >= 1");
  }
  // Row-major fill order is part of the reproducibility contract.
  ComplexMatrix z(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      z(r, c) = rng.complex_normal();
    }
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  // Rescale columns so the implicit R has positive diagonal; plain
  // Householder Q alone is not Haar-distributed.
  const auto rdiag = qr.matrixQR().diagonal();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(rdiag(j));
    if (mag > 0.0) {
      q.col(j) *= rdiag(j) / mag;
    }
  }
  return UnitaryMatrix(std::move(q));
}

std::vector<double> eigenangles(const UnitaryMatrix& u) {
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(u.matrix(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw InvariantViolation("eigenangles: eigensolver failed to converge");
  }
  const auto& vals = solver.eigenvalues();
  std::vector<double> angles(static_cast<std::size_t>(vals.size()));
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    double theta = std::arg(vals(k));
    if (theta <= -std::numbers::pi) theta += 2.0 * std::numbers::pi;  // map -pi to +pi
    angles[static_cast<std::size_t>(k)] = theta;
  }
  std::stable_sort(angles.begin(), angles.end());
  return angles;
}

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidDimension("matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                           " vs " + std::to_string(b.rows()) + ")");
  }
  return a * b;
}

}  // namespace umesh
