// Serial reference against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include "lpq/growth.hpp"
#include "lpq/solver.hpp"

namespace {

const lpq::IntegrandSpec& model() {
  static const lpq::IntegrandSpec f =
      lpq::IntegrandSpec::power(0.0, 2.0) + lpq::IntegrandSpec::axis(0, 4.0) + lpq::IntegrandSpec::axis(1, 4.0);
  return f;
}

void assembly(benchmark::State& state, lpq::Exec exec) {
  const lpq::Grid grid(2, static_cast<int>(state.range(0)));
  const Eigen::VectorXd u = lpq::boundary_values(grid, 1, "sine", 1.0);
  for (auto _ : state) {
    auto a = lpq::assemble(model(), grid, 1, u, 2, exec);
    benchmark::DoNotOptimize(a.energy);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.simplex_count()));
}

void legendre(benchmark::State& state, lpq::Exec exec) {
  lpq::CheckOptions opts;
  opts.samples = static_cast<int>(state.range(0));
  opts.exec = exec;
  const lpq::Regime r{2, 1, 2.0, 4.0, 0.0, 8.0};
  for (auto _ : state) {
    auto c = lpq::check_legendre(model(), r, opts);
    benchmark::DoNotOptimize(c.constant_assf3);
  }
}

}  // namespace

BENCHMARK_CAPTURE(assembly, serial, lpq::Exec::serial)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(assembly, parallel, lpq::Exec::parallel)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(legendre, serial, lpq::Exec::serial)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(legendre, parallel, lpq::Exec::parallel)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
