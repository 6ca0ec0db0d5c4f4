#pragma once

// Data-parallel inner loops behind the analytics module. Every kernel has a
// serial reference in kernels::serial and an OpenMP variant in kernels::omp
// with the same signature. Floating-point reductions in the OpenMP variants
// compute per-row (or per-bin) partials in parallel and add them in index
// order, so both variants return bit-identical results for any thread count.

#include <cstdint>
#include <span>
#include <vector>

#include "edabench/core.hpp"
#include "edabench/raster.hpp"

namespace edabench::kernels {

/// Running count/mean/sum-of-squared-deviations (Welford), mergeable in a
/// fixed order (Chan et al.).
struct Moments {
  double n = 0;
  double mean = 0;
  double m2 = 0;

  void add(double x) {
    n += 1;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  double variance() const { return n > 0 ? m2 / n : 0.0; }  // population
};

/// Per-image statistics; see low_level_features for the formulas built on top.
struct FeatureSums {
  Moments luma;         // Y over all pixels
  double chroma = 0;    // sum sqrt(Cb^2 + Cr^2) over all pixels
  Moments laplacian;    // 3x3 Laplacian of Y over interior pixels
  Moments sobel;        // Sobel gradient magnitude of Y over interior pixels
};

/// Bin index along one axis: floor(v * bins), with v == 1 folded into the last bin.
inline int bin_of(double v, int bins) {
  const int b = static_cast<int>(v * bins);
  return b >= bins ? bins - 1 : (b < 0 ? 0 : b);
}

namespace serial {
std::vector<double> luma(const Raster& img);
std::vector<std::uint64_t> histogram2d(std::span<const NormPoint> points, int gx, int gy);
double jsd_sum(std::span<const double> p, std::span<const double> q);
FeatureSums feature_sums(const Raster& img);
}  // namespace serial

namespace omp {
std::vector<double> luma(const Raster& img);
std::vector<std::uint64_t> histogram2d(std::span<const NormPoint> points, int gx, int gy);
double jsd_sum(std::span<const double> p, std::span<const double> q);
FeatureSums feature_sums(const Raster& img);
}  // namespace omp

int max_threads();

}  // namespace edabench::kernels
