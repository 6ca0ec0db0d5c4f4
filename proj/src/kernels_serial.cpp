#include <cmath>

#include "edabench/kernels.hpp"
#include "kernels_rows.hpp"

namespace edabench::kernels::serial {

std::vector<double> luma(const Raster& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width()) * img.height());
  for (int row = 0; row < img.height(); ++row) detail::luma_row(img, row, y.data());
  return y;
}

std::vector<std::uint64_t> histogram2d(std::span<const NormPoint> points, int gx, int gy) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(gx) * gy, 0);
  for (const auto& p : points) {
    ++counts[static_cast<std::size_t>(bin_of(p.y(), gy)) * gx + bin_of(p.x(), gx)];
  }
  return counts;
}

double jsd_sum(std::span<const double> p, std::span<const double> q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += detail::jsd_term(p[i], q[i]);
  return sum;
}

FeatureSums feature_sums(const Raster& img) {
  const auto y = luma(img);
  std::vector<detail::RowSums> rows(static_cast<std::size_t>(img.height()));
  for (int row = 0; row < img.height(); ++row) rows[static_cast<std::size_t>(row)] = detail::row_sums(img, y, row);
  return detail::combine(rows);
}

}  // namespace edabench::kernels::serial
