#include <benchmark/benchmark.h>

#include <numbers>

#include <umesh/experiments.hpp>
#include <umesh/gradients.hpp>

using namespace umesh;

namespace {

ParameterVector random_params(const Device& dev, RngStream& rng) {
  ParameterVector p(dev.param_count());
  for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return p;
}

void BM_HaarSample(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  RngStream rng(1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(haar_random_unitary(n, rng));
  }
}
BENCHMARK(BM_HaarSample)->Arg(8)->Arg(32)->Arg(128);

void BM_MplcForward(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const MplcDevice dev = MplcDevice::sample(n, n + 1, true, std::nullopt, RngStream(2, 1));
  RngStream rng(2, 2);
  const ParameterVector p = random_params(dev, rng);
  const ParameterVector q = dev.effective_phases(p);
  Device::Workspace ws;
  for (auto _ : state) {
    dev.forward_into(q, ws);
    benchmark::DoNotOptimize(ws.x);
  }
}
BENCHMARK(BM_MplcForward)->Arg(8)->Arg(32);

void BM_ClementsForward(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const ClementsDevice dev(n, n);
  RngStream rng(3, 1);
  const ParameterVector p = random_params(dev, rng);
  const ParameterVector q = dev.effective_phases(p);
  Device::Workspace ws;
  for (auto _ : state) {
    dev.forward_into(q, ws);
    benchmark::DoNotOptimize(ws.x);
  }
}
BENCHMARK(BM_ClementsForward)->Arg(8)->Arg(32);

void BM_AnalyticGradient(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const MplcDevice dev = MplcDevice::sample(n, n + 1, true, std::nullopt, RngStream(4, 1));
  RngStream rng(4, 2);
  const UnitaryMatrix target = haar_random_unitary(n, rng);
  LossEvaluator eval(dev, target, LossKind::FrobeniusNormalized);
  const ParameterVector p = random_params(dev, rng);
  ParameterVector grad(dev.param_count());
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval.value_and_gradient(p, grad));
  }
}
BENCHMARK(BM_AnalyticGradient)->Arg(8)->Arg(32);

void BM_FrobeniusLoss(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  RngStream rng(5, 1);
  const UnitaryMatrix x = haar_random_unitary(n, rng);
  const UnitaryMatrix u = haar_random_unitary(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(frobenius_loss(x, u));
  }
}
BENCHMARK(BM_FrobeniusLoss)->Arg(8)->Arg(128);

void BM_PhaseInsensitiveLoss(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  RngStream rng(6, 1);
  const UnitaryMatrix x = haar_random_unitary(n, rng);
  const UnitaryMatrix u = haar_random_unitary(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(phase_insensitive_loss(x, u));
  }
}
BENCHMARK(BM_PhaseInsensitiveLoss)->Arg(8)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
