#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edabench/core.hpp"
#include "edabench/raster.hpp"
#include "edabench/scoring.hpp"

namespace edabench {

/// Average (fractional) ranks, 1-based; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

/// Spearman rank correlation: Pearson correlation of average ranks. Throws
/// DimensionMismatch on unequal or too-short input and Undefined when either
/// side is constant.
double srcc(std::span<const double> x, std::span<const double> y);

/// Pearson product-moment correlation, same guards as srcc.
double plcc(std::span<const double> x, std::span<const double> y);

/// S x S matrices over subsets; entry (i,j) correlates the model scores of
/// subset i with those of subset j. Missing entries are nullopt.
struct CorrelationMatrices {
  std::vector<std::string> labels;
  std::vector<std::vector<std::optional<double>>> srcc;
  std::vector<std::vector<std::optional<double>>> plcc;
  std::vector<std::vector<std::optional<double>>> mean;  // (srcc + plcc) / 2
};

/// scores[s][m] is model m's mean score on subset s (NaN when absent). Pairs
/// are formed over models scored on both subsets; fewer than min_models pairs,
/// or an undefined correlation, leaves the entry missing. The diagonal is 1
/// for every subset with at least min_models scores.
CorrelationMatrices subset_correlation_matrix(const std::vector<std::vector<double>>& scores,
                                              std::vector<std::string> labels, int min_models = 3);

/// Normalized 2-D histogram of click locations, stored row-major (y then x).
class HeatGrid {
 public:
  HeatGrid(int gx = 64, int gy = 36);

  int gx() const { return gx_; }
  int gy() const { return gy_; }
  double at(int ix, int iy) const { return bins_[static_cast<std::size_t>(iy) * gx_ + ix]; }
  std::span<const double> bins() const { return bins_; }
  double total() const;

  static HeatGrid from_bins(int gx, int gy, std::vector<double> bins);

 private:
  int gx_;
  int gy_;
  std::vector<double> bins_;
};

/// Counts points per cell (floor(x*gx), floor(y*gy); 1.0 folds into the last
/// cell) and normalizes to unit mass. Empty input gives an all-zero grid.
HeatGrid build_heatmap(std::span<const NormPoint> points, int gx = 64, int gy = 36);

/// Base-2 Jensen-Shannon divergence of two unit-mass grids, in [0,1].
double js_divergence(const HeatGrid& p, const HeatGrid& q);

enum class PhaseLabel { P1, P2, P3, P4 };
std::string_view to_string(PhaseLabel p);

/// Quadrant of (answer, action) against the means. P1: both above; P2: answer
/// not above, action above; P3: neither above; P4: answer above only. Ties
/// count as "not above".
PhaseLabel phase_assign(double answer, double action, double mean_answer, double mean_action);

struct GainRow {
  std::string level;
  double mean = 0.0;
  std::optional<double> abs_gain;  // empty for the first level
  std::optional<double> pct_gain;  // empty for the first level or a zero predecessor
};

/// Successive gains between ordered levels, e.g. Large -> Middle -> Small.
std::vector<GainRow> gain_table(const std::vector<std::pair<std::string, double>>& levels);

struct FeatureVector {
  double luminance = 0.0;
  double contrast = 0.0;
  double chrominance = 0.0;
  double blur = 0.0;
  double spatial_information = 0.0;
};

/// Y = BT.601 luma. luminance = mean Y; contrast = RMS contrast (population
/// std of Y); chrominance = mean |(Cb, Cr)| about neutral; blur = variance of
/// the 4-neighbour Laplacian of Y; SI = std of the Sobel magnitude of Y.
/// Filters are evaluated on interior pixels only.
FeatureVector low_level_features(const Raster& image);

/// Agents ranked by mean score on the given metric, best first, truncated to k.
std::vector<std::string> top_k_agents(const std::vector<ScoreRecord>& records, int k, bool by_action = true);

}  // namespace edabench
