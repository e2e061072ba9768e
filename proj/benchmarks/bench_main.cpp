#include <benchmark/benchmark.h>

#include <random>

#include "nnrk/config.hpp"
#include "nnrk/discretization.hpp"
#include "nnrk/driver.hpp"
#include "nnrk/rk.hpp"
#include "nnrk/scni.hpp"
#include "nnrk/study.hpp"

using namespace nnrk;

namespace {

RunConfig preset(const char* name) { return load_config(std::string(NNRK_PRESET_SOURCE) + "/" + name + ".json"); }

void shape_values(benchmark::State& state) {
  const Domain2D d = Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  const NodeSet n = build_uniform_grid(state.range(0), state.range(0), d);
  const RKApproximation rk(n, RKConfig{1, 2.0});
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rk.shape_values(Vec2(u(rng), u(rng))));
}
BENCHMARK(shape_values)->Arg(11)->Arg(41);

void smoothing_operators(benchmark::State& state) {
  const Domain2D d = Domain2D::rectangle(Vec2(0, 0), Vec2(1, 1));
  const SmoothingCellMesh mesh = build_smoothing_cells(build_uniform_grid(state.range(0), state.range(0), d), d);
  for (auto _ : state) benchmark::DoNotOptimize(build_operators(mesh));
}
BENCHMARK(smoothing_operators)->Arg(11)->Arg(41)->Unit(benchmark::kMillisecond);

void loss_and_gradient(benchmark::State& state, const char* name) {
  const RunConfig cfg = preset(name);
  const GradientInstance inst = make_gradient_instance(cfg, cfg.nn.seed);
  const LossModel model = inst.model();
  Eigen::VectorXd g;
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate(inst.p, &g));
}
BENCHMARK_CAPTURE(loss_and_gradient, case1, "case1")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(loss_and_gradient, shear_m1, "shear_m1")->Unit(benchmark::kMicrosecond);

void elastic_step(benchmark::State& state) {
  RunConfig cfg = preset("compression");
  cfg.load.steps = 1;
  RunOptions o;
  o.write_outputs = false;
  for (auto _ : state) {
    Simulation sim(cfg);
    benchmark::DoNotOptimize(run_simulation(sim, o));
  }
}
BENCHMARK(elastic_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
