// Serial reference vs OpenMP kernels on report-sized inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "edabench/kernels.hpp"

using namespace edabench;
namespace k = edabench::kernels;

namespace {

Raster noise(int w, int h) {
  std::mt19937 rng(17);
  Raster img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng());
  return img;
}

std::vector<NormPoint> clicks(std::size_t n) {
  std::mt19937 rng(18);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<NormPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng));
  return out;
}

std::vector<double> mass(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> v(n);
  double t = 0;
  for (auto& x : v) t += x = u(rng);
  for (auto& x : v) x /= t;
  return v;
}

template <auto Fn>
void BM_features(benchmark::State& st) {
  const auto img = noise(static_cast<int>(st.range(0)), static_cast<int>(st.range(0) * 9 / 16));
  for (auto _ : st) benchmark::DoNotOptimize(Fn(img));
  st.SetItemsProcessed(st.iterations() * img.width() * img.height());
}

template <auto Fn>
void BM_histogram(benchmark::State& st) {
  const auto pts = clicks(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(Fn(pts, 64, 36));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <auto Fn>
void BM_jsd(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto p = mass(n, 1), q = mass(n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(Fn(p, q));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_features<k::serial::feature_sums>)->Name("features/serial")->Arg(640)->Arg(1920)->Arg(3840);
BENCHMARK(BM_features<k::omp::feature_sums>)->Name("features/omp")->Arg(640)->Arg(1920)->Arg(3840);
BENCHMARK(BM_histogram<k::serial::histogram2d>)->Name("histogram/serial")->Arg(10000)->Arg(1000000);
BENCHMARK(BM_histogram<k::omp::histogram2d>)->Name("histogram/omp")->Arg(10000)->Arg(1000000);
BENCHMARK(BM_jsd<k::serial::jsd_sum>)->Name("jsd/serial")->Arg(2304)->Arg(1 << 20);
BENCHMARK(BM_jsd<k::omp::jsd_sum>)->Name("jsd/omp")->Arg(2304)->Arg(1 << 20);

BENCHMARK_MAIN();
