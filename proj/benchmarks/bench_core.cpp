#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "vbcast/analytic.hpp"
#include "vbcast/choi.hpp"
#include "vbcast/operators.hpp"
#include "vbcast/optimizer.hpp"
#include "vbcast/permutations.hpp"
#include "vbcast/rng.hpp"
#include "vbcast/sampling.hpp"

namespace {

using namespace vbcast;

void BM_U2Closed(benchmark::State& state) {
  const AbcProblem problem(int(state.range(0)), 0.12, 0.21);
  for (auto _ : state) {
    benchmark::DoNotOptimize(u2_closed(problem));
  }
}
BENCHMARK(BM_U2Closed)->Arg(2)->Arg(10);

void BM_ThetaSearch(benchmark::State& state) {
  const AbcProblem problem(int(state.range(0)), 0.12, 0.21);
  for (auto _ : state) {
    benchmark::DoNotOptimize(abc_dual_theta_search(problem).value);
  }
}
BENCHMARK(BM_ThetaSearch)->Arg(2)->Arg(10);

void BM_TwirlExact(benchmark::State& state) {
  const int d = int(state.range(0));
  Rng rng(7);
  const long dim = long(d) * d * d;
  Eigen::MatrixXcd g(dim, dim);
  for (long r = 0; r < dim; ++r) {
    for (long c = 0; c < dim; ++c) g(r, c) = std::complex<double>(rng.normal(), rng.normal());
  }
  const MultipartiteOperator x(Eigen::MatrixXcd(0.5 * (g + g.adjoint())), {d, d, d});
  for (auto _ : state) {
    benchmark::DoNotOptimize(twirl_exact(x));
  }
}
BENCHMARK(BM_TwirlExact)->Arg(2)->Arg(3);

void BM_PencilEigenDense(benchmark::State& state) {
  const int d = int(state.range(0));
  const MultipartiteOperator pencil = m_xy(0.4, -0.7, d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hermitian_eigenvalues(pencil));
  }
}
BENCHMARK(BM_PencilEigenDense)->Arg(2)->Arg(3);

void BM_SdpBarrierAbc(benchmark::State& state) {
  const SdpStandardForm form = build_abc_primal_sdp(2, 2, {0.1, 0.3});
  for (auto _ : state) {
    benchmark::DoNotOptimize(sdp_barrier_solve(form).value);
  }
}
BENCHMARK(BM_SdpBarrierAbc);

void BM_SimulateShots(benchmark::State& state) {
  Eigen::MatrixXcd plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  Eigen::MatrixXcd pauli_z(2, 2);
  pauli_z << 1.0, 0.0, 0.0, -1.0;
  ExperimentConfig config{identity_decomposition(2), MultipartiteOperator(plus, {2}),
                          MultipartiteOperator(pauli_z, {2})};
  config.shots = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_estimate(config).mean);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateShots)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
