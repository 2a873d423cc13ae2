#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "singr/geodesic.hpp"
#include "singr/loss.hpp"
#include "singr/sing.hpp"

namespace {

singr::Volume noise_volume(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const singr::Dims d{side, side, side};
  std::vector<double> data(d.voxels());
  for (double& v : data) v = u(rng);
  return singr::Volume(d, 1, {}, std::move(data));
}

singr::Mask ball(std::size_t side) {
  const singr::Dims d{side, side, side};
  singr::Mask m(d, {});
  const double c = side / 2.0, r = side / 4.0;
  for (std::size_t z = 0, p = 0; z < side; ++z)
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x, ++p) m.set(p, std::hypot(x - c, y - c, z - c) < r);
  return m;
}

void BM_GeodesicRaster(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto v = noise_volume(side, 1);
  const singr::SeedSet seeds(v.dims(), std::vector<std::size_t>{0, v.voxels() / 2});
  for (auto _ : state) benchmark::DoNotOptimize(singr::geodesic_raster(v, seeds, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(v.voxels()));
}
BENCHMARK(BM_GeodesicRaster)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SingTransform(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto v = noise_volume(side, 2);
  const auto m = ball(side);
  for (auto _ : state) benchmark::DoNotOptimize(singr::sing_transform(v, m));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(v.voxels()));
}
BENCHMARK(BM_SingTransform)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FocalL1(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(static_cast<std::size_t>(state.range(0))), z(s.size());
  for (auto& x : s) x = u(rng);
  for (auto& x : z) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(singr::focal_l1(s, z));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FocalL1)->Arg(1 << 12)->Arg(1 << 21);

}  // namespace
