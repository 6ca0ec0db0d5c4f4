#pragma once

// Per-row and per-bin bodies shared by the serial and OpenMP kernels.

#include <cmath>
#include <vector>

#include "edabench/kernels.hpp"

namespace edabench::kernels::detail {

inline void luma_row(const Raster& img, int row, double* out) {
  const auto px = img.bytes();
  const auto w = static_cast<std::size_t>(img.width());
  const auto base = static_cast<std::size_t>(row) * w;
  for (std::size_t x = 0; x < w; ++x) {
    const auto i = (base + x) * 3;
    out[base + x] = 0.299 * px[i] + 0.587 * px[i + 1] + 0.114 * px[i + 2];
  }
}

// Zero-probability bins contribute nothing (0 log 0 = 0).
inline double jsd_term(double p, double q) {
  const double m = 0.5 * (p + q);
  double t = 0.0;
  if (p > 0.0) t += p * std::log2(p / m);
  if (q > 0.0) t += q * std::log2(q / m);
  return t;
}

struct RowSums {
  Moments luma;
  double chroma = 0;
  Moments laplacian;
  Moments sobel;
};

inline RowSums row_sums(const Raster& img, const std::vector<double>& y, int row) {
  RowSums s;
  const int w = img.width(), h = img.height();
  const auto px = img.bytes();
  for (int x = 0; x < w; ++x) {
    const auto idx = static_cast<std::size_t>(row) * w + x;
    s.luma.add(y[idx]);
    const double r = px[idx * 3], g = px[idx * 3 + 1], b = px[idx * 3 + 2];
    const double cb = -0.168736 * r - 0.331264 * g + 0.5 * b;
    const double cr = 0.5 * r - 0.418688 * g - 0.081312 * b;
    s.chroma += std::sqrt(cb * cb + cr * cr);
  }
  if (w < 3 || h < 3 || row == 0 || row == h - 1) return s;
  auto Y = [&](int xx, int yy) { return y[static_cast<std::size_t>(yy) * w + xx]; };
  for (int x = 1; x < w - 1; ++x) {
    s.laplacian.add(Y(x - 1, row) + Y(x + 1, row) + Y(x, row - 1) + Y(x, row + 1) - 4.0 * Y(x, row));
    const double gx = (Y(x + 1, row - 1) + 2.0 * Y(x + 1, row) + Y(x + 1, row + 1)) -
                      (Y(x - 1, row - 1) + 2.0 * Y(x - 1, row) + Y(x - 1, row + 1));
    const double gy = (Y(x - 1, row + 1) + 2.0 * Y(x, row + 1) + Y(x + 1, row + 1)) -
                      (Y(x - 1, row - 1) + 2.0 * Y(x, row - 1) + Y(x + 1, row - 1));
    s.sobel.add(std::sqrt(gx * gx + gy * gy));
  }
  return s;
}

inline FeatureSums combine(const std::vector<RowSums>& rows) {
  FeatureSums f;
  for (const auto& r : rows) {
    f.luma.merge(r.luma);
    f.chroma += r.chroma;
    f.laplacian.merge(r.laplacian);
    f.sobel.merge(r.sobel);
  }
  return f;
}

}  // namespace edabench::kernels::detail
