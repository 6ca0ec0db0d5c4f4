#include "edabench/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numeric>

#include "edabench/kernels.hpp"

namespace edabench {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, fmt::format("lengths {} and {} differ", x.size(), y.size()));
  }
  if (x.size() < 2) throw Error(ErrorCode::DimensionMismatch, "correlation needs at least two pairs");
}

double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::Undefined, "constant input has no correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_unchecked(rx, ry);
}

double plcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  return pearson_unchecked(x, y);
}

CorrelationMatrices subset_correlation_matrix(const std::vector<std::vector<double>>& scores,
                                              std::vector<std::string> labels, int min_models) {
  const auto s = scores.size();
  if (labels.size() != s) throw Error(ErrorCode::DimensionMismatch, "one label per subset required");
  CorrelationMatrices out;
  out.labels = std::move(labels);
  out.srcc.assign(s, std::vector<std::optional<double>>(s));
  out.plcc = out.srcc;
  out.mean = out.srcc;
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (scores[i].size() != scores[j].size()) {
        throw Error(ErrorCode::DimensionMismatch, "every subset needs one score slot per model");
      }
      std::vector<double> a, b;
      for (std::size_t m = 0; m < scores[i].size(); ++m) {
        if (std::isfinite(scores[i][m]) && std::isfinite(scores[j][m])) {
          a.push_back(scores[i][m]);
          b.push_back(scores[j][m]);
        }
      }
      if (static_cast<int>(a.size()) < min_models) continue;
      if (i == j) {
        out.srcc[i][j] = out.plcc[i][j] = out.mean[i][j] = 1.0;
        continue;
      }
      try {
        out.srcc[i][j] = srcc(a, b);
        out.plcc[i][j] = plcc(a, b);
        out.mean[i][j] = (*out.srcc[i][j] + *out.plcc[i][j]) / 2.0;
      } catch (const Error&) {
        out.srcc[i][j].reset();
        out.plcc[i][j].reset();
      }
    }
  }
  return out;
}

HeatGrid::HeatGrid(int gx, int gy) : gx_(gx), gy_(gy) {
  if (gx < 1 || gy < 1) throw Error(ErrorCode::ContractViolation, fmt::format("grid {}x{}", gx, gy));
  bins_.assign(static_cast<std::size_t>(gx) * gy, 0.0);
}

double HeatGrid::total() const { return std::accumulate(bins_.begin(), bins_.end(), 0.0); }

HeatGrid HeatGrid::from_bins(int gx, int gy, std::vector<double> bins) {
  HeatGrid g(gx, gy);
  if (bins.size() != g.bins_.size()) throw Error(ErrorCode::DimensionMismatch, "bin count does not match grid");
  if (std::any_of(bins.begin(), bins.end(), [](double b) { return !(b >= 0.0); })) {
    throw Error(ErrorCode::ContractViolation, "negative bin mass");
  }
  g.bins_ = std::move(bins);
  return g;
}

HeatGrid build_heatmap(std::span<const NormPoint> points, int gx, int gy) {
  HeatGrid g(gx, gy);
  if (points.empty()) return g;
  const auto counts = kernels::omp::histogram2d(points, gx, gy);
  std::vector<double> bins(counts.size());
  const double n = static_cast<double>(points.size());
  for (std::size_t i = 0; i < counts.size(); ++i) bins[i] = static_cast<double>(counts[i]) / n;
  return HeatGrid::from_bins(gx, gy, std::move(bins));
}

double js_divergence(const HeatGrid& p, const HeatGrid& q) {
  if (p.gx() != q.gx() || p.gy() != q.gy()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("grids {}x{} and {}x{} differ", p.gx(), p.gy(), q.gx(), q.gy()));
  }
  for (const auto* g : {&p, &q}) {
    if (std::abs(g->total() - 1.0) > 1e-9) {
      throw Error(ErrorCode::ContractViolation, fmt::format("grid mass {} is not normalized", g->total()));
    }
  }
  return std::clamp(0.5 * kernels::omp::jsd_sum(p.bins(), q.bins()), 0.0, 1.0);
}

std::string_view to_string(PhaseLabel p) {
  switch (p) {
    case PhaseLabel::P1: return "P1";
    case PhaseLabel::P2: return "P2";
    case PhaseLabel::P3: return "P3";
    case PhaseLabel::P4: return "P4";
  }
  return "?";
}

PhaseLabel phase_assign(double answer, double action, double mean_answer, double mean_action) {
  const bool a = answer > mean_answer;
  const bool c = action > mean_action;
  if (a && c) return PhaseLabel::P1;
  if (!a && c) return PhaseLabel::P2;
  if (!a && !c) return PhaseLabel::P3;
  return PhaseLabel::P4;
}

std::vector<GainRow> gain_table(const std::vector<std::pair<std::string, double>>& levels) {
  if (levels.size() < 2) throw Error(ErrorCode::ContractViolation, "gain table needs at least two levels");
  std::vector<GainRow> rows;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    GainRow r{levels[i].first, levels[i].second, std::nullopt, std::nullopt};
    if (i > 0) {
      const double prev = levels[i - 1].second;
      r.abs_gain = r.mean - prev;
      if (prev != 0.0) r.pct_gain = *r.abs_gain / prev * 100.0;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

FeatureVector low_level_features(const Raster& image) {
  if (image.empty()) throw Error(ErrorCode::ImageError, "empty raster");
  const auto s = kernels::omp::feature_sums(image);
  FeatureVector f;
  f.luminance = s.luma.mean;
  f.contrast = std::sqrt(std::max(0.0, s.luma.variance()));
  f.chrominance = s.chroma / s.luma.n;
  f.blur = std::max(0.0, s.laplacian.variance());
  f.spatial_information = std::sqrt(std::max(0.0, s.sobel.variance()));
  return f;
}

std::vector<std::string> top_k_agents(const std::vector<ScoreRecord>& records, int k, bool by_action) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : records) {
    if (by_action) {
      acc[r.agent].first += r.action.action;
      acc[r.agent].second += 1;
    } else if (r.answer.available()) {
      acc[r.agent].first += *r.answer.answer;
      acc[r.agent].second += 1;
    }
  }
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [agent, sn] : acc) {
    if (sn.second > 0) ranked.emplace_back(agent, sn.first / sn.second);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && static_cast<int>(i) < k; ++i) out.push_back(ranked[i].first);
  return out;
}

}  // namespace edabench
