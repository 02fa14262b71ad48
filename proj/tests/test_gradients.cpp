#include <doctest.h>

#include <umesh/gradients.hpp>

#include <cmath>
#include <numbers>

using namespace umesh;
using std::numbers::pi;

namespace {

ParameterVector random_params(const Device& dev, RngStream& rng) {
  ParameterVector p(dev.param_count());
  for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = rng.uniform(0.0, 2.0 * pi);
  return p;
}

// Test-side central differences; touches only the loss value.
ParameterVector fd_oracle(LossEvaluator& eval, const ParameterVector& p, double h) {
  ParameterVector g(p.size());
  ParameterVector probe = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    probe(j) = p(j) + h;
    const double fp = eval.value(probe);
    probe(j) = p(j) - h;
    const double fm = eval.value(probe);
    probe(j) = p(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

void check_against_fd(const Device& dev, LossKind kind, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const UnitaryMatrix target = haar_random_unitary(dev.n_modes(), rng);
  const ParameterVector p = random_params(dev, rng);

  LossEvaluator eval(dev, target, kind);
  ParameterVector analytic(dev.param_count());
  const double value = eval.value_and_gradient(p, analytic);
  CHECK(value == doctest::Approx(eval.value(p)).epsilon(1e-14));

  const ParameterVector fd = fd_oracle(eval, p, 1e-6);
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double denom = std::max({std::abs(analytic(j)), std::abs(fd(j)), 1e-4});
    CHECK(std::abs(analytic(j) - fd(j)) / denom < 1e-5);
  }
}

}  // namespace

TEST_CASE("approx_gradient: quadratic example is exact") {
  const auto f = [](const ParameterVector& x) { return x(0) * x(0); };
  ParameterVector p(1);
  p << 1.0;
  const double delta = std::ldexp(1.0, -10);
  const ParameterVector g = approx_gradient(f, p, delta);
  CHECK(g(0) == 2.0009765625);  // 2 + 2^-10, exact in binary
}

TEST_CASE("approx_gradient: constant objective gives the zero vector") {
  const auto f = [](const ParameterVector&) { return 3.5; };
  const ParameterVector g = approx_gradient(f, ParameterVector::Zero(7), 0.5);
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("approx_gradient: exactly dim + 1 evaluations, delta validated") {
  long calls = 0;
  const auto f = [&calls](const ParameterVector& x) {
    ++calls;
    return x.squaredNorm();
  };
  approx_gradient(f, ParameterVector::Ones(13), 1e-3);
  CHECK(calls == 14);
  CHECK_THROWS_AS(approx_gradient(f, ParameterVector::Ones(3), 0.0), InvalidParameter);
  CHECK_THROWS_AS(approx_gradient(f, ParameterVector::Ones(3), -1.0), InvalidParameter);
}

TEST_CASE("standard_deltas: powers of two from the resolution study") {
  const std::vector<double> d = standard_deltas();
  REQUIRE(d.size() == 6);
  CHECK(d[0] == std::ldexp(1.0, -6));
  CHECK(d[2] == std::ldexp(1.0, -10));
  CHECK(d[5] == std::ldexp(1.0, -18));
}

TEST_CASE("analytic gradient vanishes at the global minimum") {
  const MplcDevice dev = MplcDevice::sample(2, 2, true, std::nullopt, RngStream(41, 0));
  RngStream rng(42, 0);
  const ParameterVector p0 = random_params(dev, rng);
  const UnitaryMatrix target = dev.forward(p0);
  const ParameterVector g =
      analytic_gradient(dev, p0, target, LossKind::FrobeniusNormalized);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("analytic gradient matches central differences: MPLC") {
  const MplcDevice dev = MplcDevice::sample(4, 5, true, std::nullopt, RngStream(50, 0));
  check_against_fd(dev, LossKind::FrobeniusNormalized, 51);
  check_against_fd(dev, LossKind::PhaseInsensitive, 52);
}

TEST_CASE("analytic gradient matches central differences: MPLC without output phases") {
  const MplcDevice dev = MplcDevice::sample(4, 5, false, std::nullopt, RngStream(53, 0));
  check_against_fd(dev, LossKind::FrobeniusNormalized, 54);
  check_against_fd(dev, LossKind::PhaseInsensitive, 55);
}

TEST_CASE("analytic gradient matches central differences: MPLC with crosstalk") {
  const MplcDevice dev =
      MplcDevice::sample(4, 5, true, CrosstalkModel::neighbor_default(), RngStream(56, 0));
  check_against_fd(dev, LossKind::FrobeniusNormalized, 57);
  check_against_fd(dev, LossKind::PhaseInsensitive, 58);
}

TEST_CASE("analytic gradient matches central differences: Clements") {
  const ClementsDevice dev(4, 4);
  check_against_fd(dev, LossKind::FrobeniusNormalized, 60);
  check_against_fd(dev, LossKind::PhaseInsensitive, 61);
}

TEST_CASE("analytic gradient matches central differences: Clements with crosstalk") {
  const ClementsDevice dev(4, 4, CrosstalkModel::neighbor_default());
  check_against_fd(dev, LossKind::FrobeniusNormalized, 62);
  check_against_fd(dev, LossKind::PhaseInsensitive, 63);
}

TEST_CASE("forward differences approach the analytic gradient as delta shrinks") {
  const MplcDevice dev = MplcDevice::sample(8, 9, true, std::nullopt, RngStream(70, 0));
  RngStream rng(71, 0);
  const UnitaryMatrix target = haar_random_unitary(8, rng);
  const ParameterVector p = random_params(dev, rng);

  LossEvaluator eval(dev, target, LossKind::FrobeniusNormalized);
  ParameterVector analytic(dev.param_count());
  eval.value_and_gradient(p, analytic);

  const ParameterVector fd = approx_gradient(
      [&eval](const ParameterVector& x) { return eval.value(x); }, p, std::ldexp(1.0, -10));
  CHECK((fd - analytic).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("gradient_check: reports below the contract threshold") {
  const MplcDevice mplc = MplcDevice::sample(4, 5, true, std::nullopt, RngStream(80, 0));
  RngStream r1(81, 0);
  const GradCheckReport a = gradient_check(mplc, LossKind::FrobeniusNormalized, 3, r1);
  CHECK(a.trials == 3);
  CHECK(a.max_rel_error < 1e-5);
  CHECK(a.worst_param >= 0);

  const ClementsDevice clem(4, 4, CrosstalkModel::neighbor_default());
  RngStream r2(82, 0);
  const GradCheckReport b = gradient_check(clem, LossKind::PhaseInsensitive, 3, r2);
  CHECK(b.max_rel_error < 1e-5);

  RngStream r3(83, 0);
  CHECK_THROWS_AS(gradient_check(mplc, LossKind::FrobeniusNormalized, 0, r3), InvalidParameter);
}

TEST_CASE("phase-insensitive gradient stays finite at |M_ii| ~ 0") {
  // Target chosen so X U^+ is (numerically) the swap matrix: both diagonal
  // intensities vanish, the non-smooth point of h_U.
  const MplcDevice dev = MplcDevice::sample(2, 3, true, std::nullopt, RngStream(90, 0));
  RngStream rng(91, 0);
  const ParameterVector p = random_params(dev, rng);
  const ComplexMatrix x = dev.forward(p).matrix();
  ComplexMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const UnitaryMatrix target = UnitaryMatrix::trusted(swap.adjoint() * x);

  const ParameterVector g = analytic_gradient(dev, p, target, LossKind::PhaseInsensitive);
  CHECK(g.allFinite());
}

TEST_CASE("LossEvaluator rejects mismatched targets") {
  const MplcDevice dev = MplcDevice::sample(4, 3, true, std::nullopt, RngStream(92, 0));
  RngStream rng(93, 0);
  const UnitaryMatrix small = haar_random_unitary(3, rng);
  CHECK_THROWS_AS(LossEvaluator(dev, small, LossKind::FrobeniusNormalized), InvalidDimension);
}
