#include <benchmark/benchmark.h>

#include "zlpf/grid.hpp"
#include "zlpf/presets.hpp"
#include "zlpf/rng.hpp"

using namespace zlpf;

namespace {

Eigen::VectorXd pole3() {
  Eigen::VectorXd v(3);
  v << 0.0, 0.0, 1.0;
  return v;
}

std::vector<SpherePoint> points(int n, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SpherePoint> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(uniform_sample(rng, dim));
  return out;
}

FlowChain generic_chain(int dim, int blocks) {
  Rng rng(7);
  GenericPreset preset;
  for (int k = 0; k < blocks; ++k) {
    GenericBlock block;
    block.rotation = rotation_to(uniform_sample(rng, dim)).matrix();
    block.kappa = 0.5 + 2.0 * rng.uniform();
    Eigen::MatrixXd a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a(i, j) = 0.4 * rng.gaussian();
    block.a = a + 1.5 * Eigen::MatrixXd::Identity(dim, dim);
    preset.blocks.push_back(block);
  }
  return build_preset(preset);
}

void log_prob_over(benchmark::State& state, const FlowChain& chain,
                   const std::vector<SpherePoint>& pts) {
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(chain.log_prob(pts[i]));
    i = (i + 1) % pts.size();
  }
}

}  // namespace

static void BM_vmf_log_prob(benchmark::State& state) {
  const FlowChain chain = build_preset(VmfPreset{pole3(), static_cast<double>(state.range(0))});
  log_prob_over(state, chain, points(512, 3, 1));
}
BENCHMARK(BM_vmf_log_prob)->Arg(10)->Arg(1000);

static void BM_kent_log_prob(benchmark::State& state) {
  const FlowChain chain = build_preset(KentPreset::from_u(pole3(), 200.0, 1.4));
  log_prob_over(state, chain, points(512, 3, 2));
}
BENCHMARK(BM_kent_log_prob);

static void BM_generic15_log_prob(benchmark::State& state) {
  const FlowChain chain = generic_chain(3, 15);
  log_prob_over(state, chain, points(512, 3, 3));
}
BENCHMARK(BM_generic15_log_prob);

static void BM_vmf11_log_prob(benchmark::State& state) {
  Rng rng(4);
  const FlowChain chain = build_preset(VmfPreset{uniform_sample(rng, 11).coords(), 50.0});
  log_prob_over(state, chain, points(512, 11, 5));
}
BENCHMARK(BM_vmf11_log_prob);

static void BM_sample_kent(benchmark::State& state) {
  const FlowChain chain = build_preset(KentPreset::from_u(pole3(), 200.0, 1.4));
  Rng rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(chain.sample(rng, 64));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_sample_kent);

static void BM_axial_solve(benchmark::State& state) {
  // Newton inversion cost per h evaluation away from the closed form.
  const int dim = static_cast<int>(state.range(0));
  const double kappa = static_cast<double>(state.range(1));
  const ZoomKernel kernel(dim, kappa, true);
  const auto pts = points(256, dim, 8);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernel.h_forward(pts[i].last()));
    i = (i + 1) % pts.size();
  }
}
BENCHMARK(BM_axial_solve)->Args({3, 10})->Args({5, 1000})->Args({4, 1000})->Args({100, 2000000});

static void BM_density_grid(benchmark::State& state) {
  const FlowChain chain = build_preset(KentPreset::from_u(pole3(), 200.0, 1.4));
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_density_grid(chain, 180, 1));
  }
}
BENCHMARK(BM_density_grid);

BENCHMARK_MAIN();
