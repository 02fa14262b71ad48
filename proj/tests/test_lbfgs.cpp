#include <doctest.h>

#include <umesh/lbfgs.hpp>

#include <cmath>

using namespace umesh;
using Eigen::VectorXd;

namespace {

double quadratic(const VectorXd& x, VectorXd& g) {
  g = 2.0 * (x.array() - 1.0);
  return (x.array() - 1.0).square().sum();
}

double rosenbrock(const VectorXd& x, VectorXd& g) {
  const double a = x(0), b = x(1);
  g.resize(2);
  g(0) = -400.0 * a * (b - a * a) - 2.0 * (1.0 - a);
  g(1) = 200.0 * (b - a * a);
  const double t1 = b - a * a, t2 = 1.0 - a;
  return 100.0 * t1 * t1 + t2 * t2;
}

}  // namespace

TEST_CASE("minimize: convex quadratic converges in a few iterations") {
  LbfgsConfig cfg;
  const OptimResult res = minimize(quadratic, VectorXd::Zero(20), cfg);
  CHECK(res.termination == Termination::GradTol);
  CHECK(res.n_iterations <= 30);
  CHECK((res.final_params.array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(res.final_loss < 1e-18);
}

TEST_CASE("minimize: Rosenbrock from (-1.2, 1)") {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  const OptimResult res = minimize(rosenbrock, x0, cfg);
  CHECK(res.final_loss < 1e-10);
  CHECK(res.final_params(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.final_params(1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("minimize: trace is non-increasing and starts at f(p0)") {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  const OptimResult res = minimize(rosenbrock, x0, cfg);
  VectorXd g(2);
  CHECK(res.trace.front() == rosenbrock(x0, g));
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i] <= res.trace[i - 1]);
  }
  CHECK(res.trace.size() == static_cast<std::size_t>(res.n_iterations) + 1);
  CHECK(res.final_loss == res.trace.back());
}

TEST_CASE("minimize: bit-for-bit deterministic") {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  const OptimResult a = minimize(rosenbrock, x0, cfg);
  const OptimResult b = minimize(rosenbrock, x0, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i] == b.trace[i]);
  CHECK((a.final_params - b.final_params).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.n_objective_evals == b.n_objective_evals);
}

TEST_CASE("minimize: survives non-smooth and ill-conditioned objectives") {
  // |x|_1 with sign subgradients: the line search eventually fails at the
  // kink, which must terminate cleanly instead of producing NaN.
  const ObjectiveFn absval = [](const VectorXd& x, VectorXd& g) {
    g = x.array().sign();
    return x.cwiseAbs().sum();
  };
  const OptimResult res = minimize(absval, VectorXd::Constant(5, 0.7), LbfgsConfig{});
  CHECK(std::isfinite(res.final_loss));
  for (double v : res.trace) CHECK(std::isfinite(v));

  const ObjectiveFn badly_scaled = [](const VectorXd& x, VectorXd& g) {
    g.resize(2);
    g(0) = 2e12 * x(0);
    g(1) = 2e-8 * x(1);
    return 1e12 * x(0) * x(0) + 1e-8 * x(1) * x(1);
  };
  VectorXd x0(2);
  x0 << 1.0, 1.0;
  const OptimResult res2 = minimize(badly_scaled, x0, LbfgsConfig{});
  CHECK(std::isfinite(res2.final_loss));
  CHECK(res2.final_loss < 1.0);
}

TEST_CASE("minimize: gradient tolerance at the start point") {
  LbfgsConfig cfg;
  const OptimResult res = minimize(quadratic, VectorXd::Ones(4), cfg);
  CHECK(res.termination == Termination::GradTol);
  CHECK(res.n_iterations == 0);
  CHECK(res.trace.size() == 1);
}

TEST_CASE("minimize: iteration cap") {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iterations = 3;
  const OptimResult res = minimize(rosenbrock, x0, cfg);
  CHECK(res.termination == Termination::MaxIters);
  CHECK(res.n_iterations == 3);
  CHECK(res.trace.size() == 4);
}

TEST_CASE("minimize: param history stride") {
  VectorXd x0(2);
  x0 << -1.2, 1.0;
  LbfgsConfig cfg;
  cfg.max_iterations = 10;
  cfg.record_param_history = true;
  cfg.history_stride = 1;
  const OptimResult every = minimize(rosenbrock, x0, cfg);
  CHECK(every.param_history.size() == static_cast<std::size_t>(every.n_iterations) + 1);
  CHECK((every.param_history.front() - x0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((every.param_history.back() - every.final_params).cwiseAbs().maxCoeff() == 0.0);

  cfg.history_stride = 4;
  const OptimResult strided = minimize(rosenbrock, x0, cfg);
  // initial + every 4th accepted iterate + final
  CHECK(strided.param_history.size() <= every.param_history.size());
  CHECK((strided.param_history.back() - strided.final_params).cwiseAbs().maxCoeff() == 0.0);

  cfg.record_param_history = false;
  CHECK(minimize(rosenbrock, x0, cfg).param_history.empty());
}

TEST_CASE("minimize: non-finite objective aborts with the offending iterate") {
  const ObjectiveFn exploding = [](const VectorXd& x, VectorXd& g) {
    g = VectorXd::Constant(x.size(), -1.0);
    return x(0) > 2.0 ? std::nan("") : -x(0);
  };
  bool caught = false;
  try {
    minimize(exploding, VectorXd::Zero(3), LbfgsConfig{});
  } catch (const NumericFailure& ex) {
    caught = true;
    CHECK(ex.iterate.size() == 3);
    CHECK(ex.iterate(0) > 2.0);
  }
  CHECK(caught);
}

TEST_CASE("minimize: config validation") {
  VectorXd x0 = VectorXd::Ones(2);
  LbfgsConfig bad;
  bad.history_size = 0;
  CHECK_THROWS_AS(minimize(quadratic, x0, bad), InvalidParameter);
  bad = LbfgsConfig{};
  bad.wolfe_c1 = 0.95;  // c1 >= c2
  CHECK_THROWS_AS(minimize(quadratic, x0, bad), InvalidParameter);
  bad = LbfgsConfig{};
  bad.history_stride = 0;
  CHECK_THROWS_AS(minimize(quadratic, x0, bad), InvalidParameter);
  CHECK_THROWS_AS(minimize(quadratic, VectorXd(), LbfgsConfig{}), InvalidParameter);
}
