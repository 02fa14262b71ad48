#pragma once

#include "umesh/linalg.hpp"

namespace umesh {

enum class LossKind {
  FrobeniusNormalized,  // ||X - U||_F^2 / 4N, in [0, 1]
  PhaseInsensitive,     // sum_ij (delta_ij - |[XU^+]_ij|)^2, unnormalized
};

/// Normalized Frobenius distance ||x - u||_F^2 / 4N. Always in [0, 1] for
/// unitary arguments.
double frobenius_loss(const UnitaryMatrix& x, const UnitaryMatrix& u);

/// Same quantity computed from the eigen-angles of u^+ x:
/// (2N - 2 sum_k cos(theta_k)) / 4N. Independent oracle for frobenius_loss.
double spectral_loss(const UnitaryMatrix& x, const UnitaryMatrix& u);

/// Phase-insensitive distance h_u(x) = sum_ij (delta_ij - sqrt(a_ij))^2 with
/// a_ij = |[x u^+]_ij|^2, the intensities measurable at the outputs.
/// Invariant under any diagonal phase matrix applied to the outputs of x.
/// Not normalized; divide by 4N to compare against frobenius_loss.
double phase_insensitive_loss(const UnitaryMatrix& x, const UnitaryMatrix& u);

double loss_value(LossKind kind, const UnitaryMatrix& x, const UnitaryMatrix& u);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

/// Monte-Carlo estimate of E[frobenius_loss] over independent Haar pairs.
/// The expectation is 0.5 for every n.
MeanEstimate expected_loss_estimate(Eigen::Index n, long samples, RngStream& rng);

}  // namespace umesh
