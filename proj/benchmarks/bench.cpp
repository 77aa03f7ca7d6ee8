#include <benchmark/benchmark.h>

#include <random>

#include "gtd/linops.hpp"
#include "gtd/models.hpp"
#include "gtd/solver.hpp"

namespace {

using namespace gtd;

DenseTensor random_target(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseTensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t.vec()[static_cast<Eigen::Index>(i)] = n(rng);
  return t;
}

ModelSpec spec_for(ModelKind kind, const Shape& shape) {
  switch (kind) {
    case ModelKind::CP: return {kind, shape, {8}, 1, false};
    case ModelKind::Tucker: return {kind, shape, {6, 6, 3}, 1, false};
    case ModelKind::TT: return {kind, shape, {6, 3}, 1, false};
    case ModelKind::TR: return {kind, shape, {4, 4, 3}, 1, false};
  }
  return {};
}

void BM_AlsSweep(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const Shape shape{32, 32, 3};
  const DenseTensor v = random_target(shape, 2);
  TdParams p = init_params(spec_for(kind, shape));
  for (auto _ : state) {
    p = als_sweep(p, v, 1e-3);
    benchmark::DoNotOptimize(p);
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_AlsSweep)->DenseRange(0, 3);

void BM_PowerIteration(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const BlurOperator op({n, n, 3}, gaussian_kernel(5, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(max_eigenvalue(op));
}
BENCHMARK(BM_PowerIteration)->Arg(16)->Arg(32)->Arg(64);

void BM_AdmmIteration(benchmark::State& state) {
  const auto loss = static_cast<LossKind>(state.range(0));
  const Shape shape{32, 32, 3};
  const MaskOperator op = random_mask(32 * 32 * 3, 0.5, 3);
  Vector b = op.forward(random_target(shape, 4).vec());
  if (loss == LossKind::KL) b = b.cwiseAbs();
  ModelSpec spec = spec_for(ModelKind::CP, shape);
  spec.nonnegative_init = loss == LossKind::KL;
  SolverConfig cfg;
  cfg.loss = loss;
  cfg.max_iter = 10;
  cfg.tol = 1e-300;
  cfg.lambda_override = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(admm_mm_solve(b, op, spec, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.max_iter);
  state.SetLabel(std::string(to_string(loss)));
}
BENCHMARK(BM_AdmmIteration)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
