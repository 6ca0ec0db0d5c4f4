#include <algorithm>
#include <numeric>
#include <cmath>
#include <random>

#include "doctest.h"
#include "edabench/analytics.hpp"

using namespace edabench;

namespace {

// Naive oracles in long double.
long double pearson_ld(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<long double>(x.size());
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks_by_counting(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i] ? 1 : 0;
      equal += w == v[i] ? 1 : 0;
    }
    r[i] = less + (equal + 1) / 2;
  }
  return r;
}

long double jsd_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  long double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double m = (static_cast<long double>(p[i]) + q[i]) / 2;
    if (p[i] > 0) d += 0.5L * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5L * q[i] * std::log2(q[i] / m);
  }
  return d;
}

std::vector<double> random_mass(std::mt19937& rng, std::size_t n, bool sparse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  double total = 0;
  for (auto& x : v) {
    x = sparse && u(rng) < 0.5 ? 0.0 : u(rng);
    total += x;
  }
  if (total == 0) {
    v[0] = 1;
    total = 1;
  }
  for (auto& x : v) x /= total;
  return v;
}

}  // namespace

TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v{3, 1, 3, 2};
  CHECK(average_ranks(v) == std::vector<double>{3.5, 1, 3.5, 2});
}

TEST_CASE("spearman without ties matches the rank-difference formula") {
  std::mt19937 rng(1);
  for (int t = 0; t < 50; ++t) {
    const int n = 3 + static_cast<int>(rng() % 20);
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 0.0);
    std::shuffle(x.begin(), x.end(), rng);
    std::shuffle(y.begin(), y.end(), rng);
    long double d2 = 0;
    for (int i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    const long double expect = 1 - 6 * d2 / (static_cast<long double>(n) * (n * n - 1));
    CHECK(std::abs(srcc(x, y) - static_cast<double>(expect)) < 1e-12);
  }
}

TEST_CASE("spearman and pearson agree with naive oracles, ties included") {
  std::mt19937 rng(2);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 30);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng() % 7);
      y[i] = std::ldexp(static_cast<double>(rng() % 1000), -7);
    }
    bool constant_x = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
    bool constant_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (constant_x || constant_y) {
      CHECK_THROWS_AS(srcc(x, y), Error);
      continue;
    }
    CHECK(std::abs(plcc(x, y) - static_cast<double>(pearson_ld(x, y))) < 1e-12);
    CHECK(std::abs(srcc(x, y) - static_cast<double>(pearson_ld(ranks_by_counting(x), ranks_by_counting(y)))) < 1e-12);
  }
}

TEST_CASE("correlation guards") {
  const std::vector<double> a{1, 2, 3}, b{1, 2}, c{5, 5, 5};
  try {
    srcc(a, b);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
  try {
    plcc(a, c);
    FAIL("expected Undefined");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Undefined);
  }
  CHECK(plcc(a, a) == doctest::Approx(1.0));
  CHECK(srcc(a, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
}

TEST_CASE("subset matrix pairs models scored on both subsets") {
  const double nan = std::nan("");
  const std::vector<std::vector<double>> scores{
      {0.1, 0.5, 0.9, 0.3},
      {0.2, 0.6, 0.8, nan},
      {0.5, 0.5, 0.5, 0.5},
      {nan, nan, 0.4, 0.6},
  };
  const auto m = subset_correlation_matrix(scores, {"A", "B", "C", "D"});
  CHECK(m.srcc[0][0] == 1.0);
  CHECK(*m.srcc[0][1] == doctest::Approx(1.0));
  CHECK(*m.plcc[0][1] == doctest::Approx(static_cast<double>(pearson_ld({0.1, 0.5, 0.9}, {0.2, 0.6, 0.8}))));
  CHECK(*m.mean[0][1] == doctest::Approx((*m.srcc[0][1] + *m.plcc[0][1]) / 2));
  CHECK(m.srcc[0][1] == m.srcc[1][0]);
  CHECK_FALSE(m.srcc[0][2].has_value());
  CHECK_FALSE(m.srcc[0][3].has_value());
  CHECK_FALSE(m.srcc[3][3].has_value());
  CHECK(m.srcc[2][2] == 1.0);
  CHECK_THROWS_AS(subset_correlation_matrix(scores, {"A"}), Error);
}

TEST_CASE("heatmap bins fold the far edge into the last cell") {
  const std::vector<NormPoint> pts{{0.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}, {0.999, 0.0}};
  const auto g = build_heatmap(pts, 4, 2);
  CHECK(g.at(0, 0) == 0.25);
  CHECK(g.at(3, 1) == 0.25);
  CHECK(g.at(2, 1) == 0.25);
  CHECK(g.at(3, 0) == 0.25);
  CHECK(g.total() == 1.0);
  CHECK(build_heatmap({}, 4, 2).total() == 0.0);
}

TEST_CASE("jensen-shannon matches the oracle and its bounds") {
  std::mt19937 rng(9);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_mass(rng, 24, t % 2 == 0);
    const auto q = random_mass(rng, 24, t % 3 == 0);
    const auto gp = HeatGrid::from_bins(6, 4, p), gq = HeatGrid::from_bins(6, 4, q);
    const double d = js_divergence(gp, gq);
    CHECK(std::abs(d - static_cast<double>(jsd_oracle(p, q))) < 1e-12);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
    CHECK(d == js_divergence(gq, gp));
    CHECK(js_divergence(gp, gp) == 0.0);
  }
  std::vector<double> a(4, 0.0), b(4, 0.0);
  a[0] = 1;
  b[3] = 1;
  CHECK(js_divergence(HeatGrid::from_bins(2, 2, a), HeatGrid::from_bins(2, 2, b)) == 1.0);
}

TEST_CASE("jensen-shannon rejects mismatched or unnormalized grids") {
  const auto a = HeatGrid::from_bins(2, 1, {0.5, 0.5});
  const auto b = HeatGrid::from_bins(1, 2, {0.5, 0.5});
  CHECK_THROWS_AS(js_divergence(a, b), Error);
  CHECK_THROWS_AS(js_divergence(a, HeatGrid(2, 1)), Error);
  CHECK_THROWS_AS(HeatGrid::from_bins(2, 1, {-0.5, 1.5}), Error);
}

TEST_CASE("phase quadrants with ties folding down") {
  CHECK(phase_assign(0.9, 0.9, 0.5, 0.5) == PhaseLabel::P1);
  CHECK(phase_assign(0.1, 0.9, 0.5, 0.5) == PhaseLabel::P2);
  CHECK(phase_assign(0.1, 0.1, 0.5, 0.5) == PhaseLabel::P3);
  CHECK(phase_assign(0.9, 0.1, 0.5, 0.5) == PhaseLabel::P4);
  CHECK(phase_assign(0.5, 0.9, 0.5, 0.5) == PhaseLabel::P2);
  CHECK(phase_assign(0.5, 0.5, 0.5, 0.5) == PhaseLabel::P3);
  CHECK(phase_assign(0.9, 0.5, 0.5, 0.5) == PhaseLabel::P4);
}

TEST_CASE("gain table over successive levels") {
  const auto rows = gain_table({{"Large", 0.41}, {"Middle", 0.5433}, {"Small", 0.6467}});
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].abs_gain.has_value());
  CHECK(*rows[1].abs_gain == doctest::Approx(0.1333));
  CHECK(*rows[1].pct_gain == doctest::Approx(32.512195));
  CHECK(*rows[2].abs_gain == doctest::Approx(0.1034));
  CHECK(*rows[2].pct_gain == doctest::Approx(19.031842));
  const auto z = gain_table({{"a", 0.0}, {"b", 0.2}});
  CHECK(z[1].abs_gain.has_value());
  CHECK_FALSE(z[1].pct_gain.has_value());
  CHECK_THROWS_AS(gain_table({{"a", 1.0}}), Error);
}

TEST_CASE("features of flat and structured images") {
  const auto flat = low_level_features(Raster(8, 8, {128, 128, 128}));
  CHECK(flat.luminance == doctest::Approx(128.0));
  CHECK(flat.contrast == doctest::Approx(0.0));
  CHECK(flat.chrominance == doctest::Approx(0.0));
  CHECK(flat.blur == doctest::Approx(0.0));
  CHECK(flat.spatial_information == doctest::Approx(0.0));

  const auto red = low_level_features(Raster(4, 4, {255, 0, 0}));
  CHECK(red.luminance == doctest::Approx(0.299 * 255));
  CHECK(red.chrominance == doctest::Approx(std::hypot(0.168736 * 255, 0.5 * 255)));

  Raster stripes(9, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) stripes.set(x, y, x % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
  const auto f = low_level_features(stripes);
  CHECK(f.contrast > 100.0);
  CHECK(f.blur > 0.0);
  CHECK_THROWS_AS(low_level_features(Raster()), Error);
}

TEST_CASE("features agree with a two-pass oracle") {
  std::mt19937 rng(4);
  Raster img(13, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())});
  std::vector<long double> Y(13 * 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x) {
      const auto c = img.at(x, y);
      Y[y * 13 + x] = 0.299L * c.r + 0.587L * c.g + 0.114L * c.b;
    }
  auto at = [&](int x, int y) { return Y[y * 13 + x]; };
  auto stats = [](const std::vector<long double>& v) {
    long double m = 0, s = 0;
    for (auto x : v) m += x;
    m /= v.size();
    for (auto x : v) s += (x - m) * (x - m);
    return std::pair{m, s / v.size()};
  };
  std::vector<long double> lap, sob;
  for (int y = 1; y < 6; ++y)
    for (int x = 1; x < 12; ++x) {
      lap.push_back(at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4 * at(x, y));
      const long double gx = at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                             2 * at(x - 1, y) - at(x - 1, y + 1);
      const long double gy = at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                             2 * at(x, y - 1) - at(x + 1, y - 1);
      sob.push_back(std::sqrt(gx * gx + gy * gy));
    }
  const auto f = low_level_features(img);
  const auto [ym, yv] = stats(Y);
  CHECK(f.luminance == doctest::Approx(static_cast<double>(ym)).epsilon(1e-12));
  CHECK(f.contrast == doctest::Approx(static_cast<double>(std::sqrt(yv))).epsilon(1e-12));
  CHECK(f.blur == doctest::Approx(static_cast<double>(stats(lap).second)).epsilon(1e-12));
  CHECK(f.spatial_information == doctest::Approx(static_cast<double>(std::sqrt(stats(sob).second))).epsilon(1e-12));
}

TEST_CASE("top-k ranks agents best first") {
  std::vector<ScoreRecord> rs;
  auto add = [&](const char* agent, int action, std::optional<double> answer) {
    ScoreRecord r;
    r.agent = agent;
    r.action = {action, action, action};
    if (answer) r.answer.answer = r.answer.precision = r.answer.recall = answer;
    rs.push_back(r);
  };
  add("a", 0, 0.9);
  add("b", 1, 0.1);
  add("c", 1, std::nullopt);
  add("c", 0, std::nullopt);
  CHECK(top_k_agents(rs, 2) == std::vector<std::string>{"b", "c"});
  CHECK(top_k_agents(rs, 5, false) == std::vector<std::string>{"a", "b"});
}
