#include <doctest.h>

#include <umesh/distances.hpp>

#include <cmath>
#include <numbers>

using namespace umesh;

namespace {

UnitaryMatrix random_diag_phases(Eigen::Index n, RngStream& rng) {
  ComplexMatrix d = ComplexMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d(k, k) = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  return UnitaryMatrix(std::move(d));
}

}  // namespace

TEST_CASE("frobenius_loss: boundary values") {
  RngStream rng(11, 0);
  for (Eigen::Index n : {2, 5, 8}) {
    const UnitaryMatrix u = haar_random_unitary(n, rng);
    CHECK(frobenius_loss(u, u) == 0.0);
    const UnitaryMatrix neg = UnitaryMatrix::trusted(-u.matrix());
    CHECK(std::abs(frobenius_loss(neg, u) - 1.0) < 1e-12);
  }
}

TEST_CASE("frobenius_loss: range and Haar mean 0.5") {
  RngStream rng(12, 0);
  double acc = 0.0;
  const int samples = 2000;
  for (int s = 0; s < samples; ++s) {
    const UnitaryMatrix x = haar_random_unitary(8, rng);
    const UnitaryMatrix u = haar_random_unitary(8, rng);
    const double v = frobenius_loss(x, u);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    acc += v;
  }
  CHECK(std::abs(acc / samples - 0.5) < 0.02);
}

TEST_CASE("frobenius identity: ||x-u||^2 == 2N - 2 Re Tr[u^+ x]") {
  RngStream rng(13, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 6;
    const UnitaryMatrix x = haar_random_unitary(n, rng);
    const UnitaryMatrix u = haar_random_unitary(n, rng);
    const double lhs = (x.matrix() - u.matrix()).squaredNorm();
    const double rhs =
        2.0 * static_cast<double>(n) - 2.0 * (u.matrix().adjoint() * x.matrix()).trace().real();
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("spectral_loss: fixed examples") {
  RngStream rng(14, 0);
  const UnitaryMatrix u = haar_random_unitary(4, rng);
  CHECK(spectral_loss(u, u) < 1e-12);

  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = Complex(0, 1);
  d(1, 1) = Complex(0, -1);
  CHECK(spectral_loss(UnitaryMatrix(d), UnitaryMatrix(ComplexMatrix::Identity(2, 2))) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("spectral_loss agrees with frobenius_loss on random pairs") {
  RngStream rng(15, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const UnitaryMatrix x = haar_random_unitary(8, rng);
    const UnitaryMatrix u = haar_random_unitary(8, rng);
    CHECK(std::abs(spectral_loss(x, u) - frobenius_loss(x, u)) < 1e-10);
  }
}

TEST_CASE("phase_insensitive_loss: zero at the target and under output phases") {
  RngStream rng(16, 0);
  const Eigen::Index n = 6;
  const UnitaryMatrix u = haar_random_unitary(n, rng);
  CHECK(phase_insensitive_loss(u, u) < 1e-12);
  for (int rep = 0; rep < 20; ++rep) {
    const UnitaryMatrix d = random_diag_phases(n, rng);
    const UnitaryMatrix du = UnitaryMatrix::trusted(d.matrix() * u.matrix());
    CHECK(phase_insensitive_loss(du, u) < 1e-12);
  }
}

TEST_CASE("phase_insensitive_loss is invariant under diagonal phase left-multiplication") {
  RngStream rng(17, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index n = 8;
    const UnitaryMatrix x = haar_random_unitary(n, rng);
    const UnitaryMatrix u = haar_random_unitary(n, rng);
    const UnitaryMatrix d = random_diag_phases(n, rng);
    const UnitaryMatrix dx = UnitaryMatrix::trusted(d.matrix() * x.matrix());
    CHECK(std::abs(phase_insensitive_loss(dx, u) - phase_insensitive_loss(x, u)) < 1e-12);
  }
}

TEST_CASE("phase_insensitive_loss bounded by the unnormalized Frobenius distance") {
  // (|z| - 1)^2 <= |z - 1|^2 term by term.
  RngStream rng(18, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const UnitaryMatrix x = haar_random_unitary(8, rng);
    const UnitaryMatrix u = haar_random_unitary(8, rng);
    const double h = phase_insensitive_loss(x, u);
    const double f2 = 4.0 * 8.0 * frobenius_loss(x, u);
    CHECK(h <= f2 + 1e-12);
  }
}

TEST_CASE("phase_insensitive_loss equals the per-row phase-minimized Frobenius distance") {
  // min over diagonal phase D of ||D x - u||^2 = 2N - 2 sum_i |M_ii|, the
  // same closed form h_u reduces to for unitary arguments.
  RngStream rng(19, 0);
  const Eigen::Index n = 5;
  for (int rep = 0; rep < 20; ++rep) {
    const UnitaryMatrix x = haar_random_unitary(n, rng);
    const UnitaryMatrix u = haar_random_unitary(n, rng);
    const ComplexMatrix m = x.matrix() * u.matrix().adjoint();

    double closed_form = 2.0 * static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) closed_form -= 2.0 * std::abs(m(i, i));
    CHECK(phase_insensitive_loss(x, u) == doctest::Approx(closed_form).epsilon(1e-10));

    // The optimal output phases realize it through the plain Frobenius norm.
    ComplexMatrix dopt = ComplexMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(m(i, i));
      dopt(i, i) = mag > 0 ? std::conj(m(i, i)) / mag : Complex(1, 0);
    }
    const UnitaryMatrix aligned = UnitaryMatrix::trusted(dopt * x.matrix());
    CHECK((aligned.matrix() - u.matrix()).squaredNorm() ==
          doctest::Approx(closed_form).epsilon(1e-9));

    // And any random phases do no better.
    for (int k = 0; k < 5; ++k) {
      const UnitaryMatrix d = random_diag_phases(n, rng);
      const UnitaryMatrix dx = UnitaryMatrix::trusted(d.matrix() * x.matrix());
      CHECK((dx.matrix() - u.matrix()).squaredNorm() >= closed_form - 1e-9);
    }
  }
}

TEST_CASE("expected_loss_estimate: 0.5 for any dimension") {
  for (Eigen::Index n : {2, 8}) {
    RngStream rng(20, static_cast<std::uint64_t>(n));
    const MeanEstimate est = expected_loss_estimate(n, 2000, rng);
    CHECK(est.samples == 2000);
    CHECK(est.std_error > 0.0);
    CHECK(std::abs(est.mean - 0.5) < 3.0 * est.std_error);
    CHECK(std::abs(est.mean - 0.5) < 0.02);
  }
}

TEST_CASE("expected_loss_estimate: edge cases") {
  RngStream rng(21, 0);
  const MeanEstimate one = expected_loss_estimate(4, 1, rng);
  CHECK(one.mean >= 0.0);
  CHECK(one.mean <= 1.0);
  CHECK(one.std_error == 0.0);
  CHECK_THROWS_AS(expected_loss_estimate(4, 0, rng), InvalidParameter);
}

TEST_CASE("distances reject dimension mismatches") {
  RngStream rng(22, 0);
  const UnitaryMatrix a = haar_random_unitary(3, rng);
  const UnitaryMatrix b = haar_random_unitary(4, rng);
  CHECK_THROWS_AS(frobenius_loss(a, b), InvalidDimension);
  CHECK_THROWS_AS(spectral_loss(a, b), InvalidDimension);
  CHECK_THROWS_AS(phase_insensitive_loss(a, b), InvalidDimension);
}
