#pragma once

// Brute-force oracles kept deliberately independent of the library's
// evaluation paths: plain triple loops and explicit factor products only.

#include <umesh/linalg.hpp>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using umesh::Complex;
using umesh::ComplexMatrix;

inline ComplexMatrix naive_matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out = ComplexMatrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Complex acc(0, 0);
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

inline ComplexMatrix phase_diag(const std::vector<double>& phases) {
  const auto n = static_cast<Eigen::Index>(phases.size());
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d(k, k) = std::polar(1.0, phases[static_cast<std::size_t>(k)]);
  }
  return d;
}

// MZI factors multiplied one by one: phi on the upper input arm, 50:50
// splitter, theta on the upper internal arm, second splitter.
inline ComplexMatrix mzi_by_hand(double theta, double phi) {
  const double s = 1.0 / std::sqrt(2.0);
  ComplexMatrix bs(2, 2);
  bs << Complex(s, 0), Complex(0, s), Complex(0, s), Complex(s, 0);
  ComplexMatrix dphi = ComplexMatrix::Identity(2, 2);
  dphi(0, 0) = std::polar(1.0, phi);
  ComplexMatrix dtheta = ComplexMatrix::Identity(2, 2);
  dtheta(0, 0) = std::polar(1.0, theta);
  return naive_matmul(bs, naive_matmul(dtheta, naive_matmul(bs, dphi)));
}

// Kernel applied by explicit neighbor summation.
inline std::vector<double> crosstalk_by_hand(const std::vector<double>& theta) {
  const auto n = static_cast<long>(theta.size());
  const std::vector<std::pair<long, double>> taps = {
      {-2, 0.1}, {-1, 0.5}, {0, 1.0}, {1, 0.5}, {2, 0.1}};
  std::vector<double> out(theta.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    for (const auto& [off, c] : taps) {
      const long j = i + off;
      if (j >= 0 && j < n) out[static_cast<std::size_t>(i)] += c * theta[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

}  // namespace oracle
