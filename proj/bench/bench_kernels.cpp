// Serial vs OpenMP versions of the hot kernels. Arg 0 is the serial
// reference, arg 1 the parallel one.
#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "foamck/gck.hpp"
#include "foamck/nets.hpp"
#include "foamck/sets.hpp"

using namespace foamck;

namespace {

DomainBox unit1() { return DomainBox({Interval{0.0, 1.0}}); }

SingularitySet dyadics() {
  SingularitySet s(unit1(), SetClass::BaireI);
  s.set_enumerator(adic_points(unit1(), 2), 256);
  return s;
}

std::vector<Point> samples_off(const SingularitySet& s, std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> out;
  while (out.size() < n) {
    Point x{u(rng)};
    if (!s.contains(x)) out.push_back(x);
  }
  return out;
}

void BM_dense_check(benchmark::State& state) {
  SingularitySet s(DomainBox({Interval{0.0, 2.0}, Interval{0.0, 2.0}}), SetClass::NowhereDense);
  for (int k = 1; k < 20; ++k) s.add(SingPrimitive::make_box(Box({Interval{0.1 * k, 0.1 * k}, Interval{0.0, 2.0}})));
  DenseCheckOptions opts;
  opts.parallel = state.range(0) == 1;
  for (auto _ : state) benchmark::DoNotOptimize(is_complement_dense_at(s, 0.01, opts).outcome);
}
BENCHMARK(BM_dense_check)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_membership(benchmark::State& state) {
  const SingularitySet s = dyadics();
  const ExampleOne ex = example_one_net(s, RadiusSchedule{});
  const auto samples = samples_off(s, 100);
  CheckOptions opts;
  opts.parallel = state.range(0) == 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_I_membership(ex.net, s, ex.representation, samples, opts).outcome);
  }
}
BENCHMARK(BM_membership)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

const GlobalSolution& transport() {
  static const GlobalSolution sol = [] {
    const ParsedPde p = load_pde(FOAMCK_SPECS "/transport.pde");
    GckConfig cfg;
    cfg.apply(p.config);
    return construct_global_solution(p.pde, p.data, cfg);
  }();
  return sol;
}

void BM_verify_residual(benchmark::State& state) {
  const GlobalSolution& sol = transport();
  const auto grid = sample_grid(sol.pde.domain, 50);
  for (auto _ : state) benchmark::DoNotOptimize(verify_residual(sol, grid, 1e-6, state.range(0) == 1).max_residual);
}
BENCHMARK(BM_verify_residual)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_construct_transport(benchmark::State& state) {
  const ParsedPde p = load_pde(FOAMCK_SPECS "/transport.pde");
  GckConfig cfg;
  cfg.apply(p.config);
  cfg.parallel = state.range(0) == 1;
  for (auto _ : state) benchmark::DoNotOptimize(construct_global_solution(p.pde, p.data, cfg).tiles.size());
}
BENCHMARK(BM_construct_transport)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
