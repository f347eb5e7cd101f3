#include <benchmark/benchmark.h>

#include "hmlab/hyperboloid.hpp"
#include "hmlab/random.hpp"

using namespace hmlab;

static void GeodesicDistance(benchmark::State& state) {
  Rng rng(42);
  const HPoint p = random_ball_point(rng, 3, 10.0);
  const HPoint q = random_ball_point(rng, 3, 10.0);
  for (auto _ : state) {
    double d = dist(p, q);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(GeodesicDistance);

static void ExpLogRoundTrip(benchmark::State& state) {
  Rng rng(42);
  const HPoint p = random_ball_point(rng, 3, 10.0);
  const HPoint q = random_ball_point(rng, 3, 10.0);
  for (auto _ : state) {
    HPoint r = exp_map(p, log_map(p, q));
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(ExpLogRoundTrip);

static void ParallelTransportEdge(benchmark::State& state) {
  Rng rng(42);
  const HPoint p = random_ball_point(rng, 3, 10.0);
  const HPoint q = random_ball_point(rng, 3, 10.0);
  const TangentVector v = tangent_frame(p)[0];
  for (auto _ : state) {
    TangentVector w = parallel_transport(p, q, v);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(ParallelTransportEdge);

static void KarcherMean(benchmark::State& state) {
  Rng rng(42);
  std::vector<WeightedPoint> pts;
  for (int i = 0; i < state.range(0); ++i) pts.push_back({random_ball_point(rng, 3, 2.0), 1.0});
  for (auto _ : state) {
    HPoint y = karcher_mean(pts, pts.front().point, 1e-10);
    benchmark::DoNotOptimize(y);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(KarcherMean)->RangeMultiplier(4)->Range(4, 512)->Complexity();

BENCHMARK_MAIN();
