#include <benchmark/benchmark.h>

#include <robustkf/certify.hpp>
#include <robustkf/nblock.hpp>
#include <robustkf/psd.hpp>
#include <robustkf/riccati.hpp>

namespace {

using namespace robustkf;

StateSpaceModel example_model() {
  Eigen::MatrixXd a(2, 2), b(2, 2), c(1, 2), d(1, 1);
  a << 0.1, 1.0, 0.0, 1.2;
  b.setIdentity();
  c << 1.0, -1.0;
  d << 1.0;
  return StateSpaceModel(a, b, c, d);
}

void BM_RiccatiStep(benchmark::State& state) {
  const StateSpaceModel model = example_model();
  const SpdMatrix p = SpdMatrix::Identity(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(riccati_step(model, p));
  }
}
BENCHMARK(BM_RiccatiStep);

void BM_RobustRiccatiStep(benchmark::State& state) {
  const StateSpaceModel model = example_model();
  const SpdMatrix p = SpdMatrix::Identity(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(robust_riccati_step(model, p, 0.05));
  }
}
BENCHMARK(BM_RobustRiccatiStep);

void BM_SolveTheta(benchmark::State& state) {
  const SpdMatrix p = SpdMatrix::Identity(8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_theta(0.05, p));
  }
}
BENCHMARK(BM_SolveTheta);

void BM_ThompsonDistance(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const SpdMatrix p = SpdMatrix::Identity(n);
  const SpdMatrix q(2.0 * Eigen::MatrixXd::Identity(n, n));
  for (auto _ : state) {
    benchmark::DoNotOptimize(thompson_distance(p, q));
  }
}
BENCHMARK(BM_ThompsonDistance)->Arg(2)->Arg(8)->Arg(16);

void BM_BuildNBlock(benchmark::State& state) {
  const StateSpaceModel model = example_model();
  const Eigen::Index n_blocks = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_nblock(model, n_blocks));
  }
}
BENCHMARK(BM_BuildNBlock)->Arg(8)->Arg(16)->Arg(32);

void BM_DistortedGramians(benchmark::State& state) {
  const NBlockSystem sys = build_nblock(example_model(), state.range(0));
  const ThetaBlock block =
      ThetaBlock::uniform(state.range(0), 0.5 * sys.phi_tilde);
  for (auto _ : state) {
    benchmark::DoNotOptimize(distorted_gramians(sys, block));
  }
}
BENCHMARK(BM_DistortedGramians)->Arg(8)->Arg(16);

void BM_FindPhi(benchmark::State& state) {
  const NBlockSystem sys = build_nblock(example_model(), 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(find_phi(sys));
  }
}
BENCHMARK(BM_FindPhi);

void BM_Certificate(benchmark::State& state) {
  const StateSpaceModel model = example_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_certificate(model, 8, 35));
  }
}
BENCHMARK(BM_Certificate);

void BM_IterateToFixedPoint(benchmark::State& state) {
  const StateSpaceModel model = example_model();
  const SpdMatrix p0 = SpdMatrix::Identity(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(iterate_riccati(model, p0, 0.05, {}));
  }
}
BENCHMARK(BM_IterateToFixedPoint);

}  // namespace

BENCHMARK_MAIN();
