#include <omp.h>

#include "edabench/kernels.hpp"
#include "kernels_rows.hpp"

namespace edabench::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace omp {

std::vector<double> luma(const Raster& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width()) * img.height());
  const int h = img.height();
#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) detail::luma_row(img, row, y.data());
  return y;
}

std::vector<std::uint64_t> histogram2d(std::span<const NormPoint> points, int gx, int gy) {
  const auto bins = static_cast<std::size_t>(gx) * gy;
  std::vector<std::uint64_t> counts(bins, 0);
  const auto n = static_cast<long>(points.size());
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(bins, 0);
#pragma omp for schedule(static) nowait
    for (long i = 0; i < n; ++i) {
      const auto& p = points[static_cast<std::size_t>(i)];
      ++local[static_cast<std::size_t>(bin_of(p.y(), gy)) * gx + bin_of(p.x(), gx)];
    }
#pragma omp critical
    for (std::size_t b = 0; b < bins; ++b) counts[b] += local[b];
  }
  return counts;
}

double jsd_sum(std::span<const double> p, std::span<const double> q) {
  std::vector<double> terms(p.size());
  const auto n = static_cast<long>(p.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    terms[static_cast<std::size_t>(i)] = detail::jsd_term(p[static_cast<std::size_t>(i)], q[static_cast<std::size_t>(i)]);
  }
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

FeatureSums feature_sums(const Raster& img) {
  const auto y = luma(img);
  const int h = img.height();
  std::vector<detail::RowSums> rows(static_cast<std::size_t>(h));
#pragma omp parallel for schedule(static)
  for (int row = 0; row < h; ++row) rows[static_cast<std::size_t>(row)] = detail::row_sums(img, y, row);
  return detail::combine(rows);
}

}  // namespace omp
}  // namespace edabench::kernels
