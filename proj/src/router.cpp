#include "edabench/router.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <future>

namespace edabench {

using nlohmann::json;

std::string_view to_string(ConfidenceMode m) {
  switch (m) {
    case ConfidenceMode::LogitDiffSigmoid: return "logit_diff_sigmoid";
    case ConfidenceMode::ProbNormalize: return "prob_normalize";
    case ConfidenceMode::TextHard: return "text_hard";
  }
  return "?";
}

std::string_view to_string(Strategy s) { return s == Strategy::MplusG ? "M+G" : "G"; }

ConfidenceMode parse_confidence_mode(std::string_view s) {
  for (auto m : {ConfidenceMode::LogitDiffSigmoid, ConfidenceMode::ProbNormalize, ConfidenceMode::TextHard}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown confidence mode '{}'", s));
}

SelectionMode SelectionMode::threshold(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorCode::ConfigError, fmt::format("tau {} outside [0,1]", tau));
  return {Kind::Threshold, tau};
}

int MarkerStyle::radius_for(int width, int height) const {
  if (radius) return *radius;
  return std::max(4, static_cast<int>(std::lround(0.005 * std::min(width, height))));
}

double confidence(const YesNoSignal& sig, ConfidenceMode mode) {
  if (mode == ConfidenceMode::TextHard) {
    return std::visit(
        [](const auto& v) -> double {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, TextOnly>) {
            return v.yes ? 1.0 : 0.0;
          } else {
            return v.yes > v.no ? 1.0 : 0.0;
          }
        },
        sig);
  }
  if (mode == ConfidenceMode::LogitDiffSigmoid) {
    const auto* l = std::get_if<Logits>(&sig);
    if (l == nullptr) throw Error(ErrorCode::ConfidenceModeError, "logit mode needs a Logits signal");
    return 1.0 / (1.0 + std::exp(-(l->yes - l->no)));
  }
  const auto* p = std::get_if<Probabilities>(&sig);
  if (p == nullptr) throw Error(ErrorCode::ConfidenceModeError, "probability mode needs a Probabilities signal");
  const double total = p->yes + p->no;
  return total > 0.0 ? p->yes / total : 0.5;
}

Strategy select_strategy(double s0, double s1, const SelectionMode& mode) {
  if (mode.kind == SelectionMode::Kind::Threshold) return s0 >= mode.tau ? Strategy::MplusG : Strategy::G;
  return s0 > s1 ? Strategy::MplusG : Strategy::G;
}

Raster render_marker(const Raster& image, const PixelPoint& p, const MarkerStyle& style) {
  Raster out = image;
  const int r = style.radius_for(image.width(), image.height());
  const int inner = std::max(0, r - style.ring_width);
  const int x0 = std::max(0, p.x - r), x1 = std::min(image.width() - 1, p.x + r);
  const int y0 = std::max(0, p.y - r), y1 = std::min(image.height() - 1, p.y + r);
  auto in_disc = [&](int x, int y, int radius) {
    const long dx = x - p.x, dy = y - p.y;
    return dx * dx + dy * dy <= static_cast<long>(radius) * radius;
  };

  long sum[3] = {0, 0, 0};
  long n = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (!in_disc(x, y, r)) continue;
      const auto c = image.at(x, y);
      sum[0] += c.r;
      sum[1] += c.g;
      sum[2] += c.b;
      ++n;
    }
  }
  auto complement = [&](int i) { return static_cast<std::uint8_t>(255 - (n ? sum[i] / n : 0)); };
  const Rgb ring{complement(0), complement(1), complement(2)};

  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (in_disc(x, y, inner)) {
        out.set(x, y, style.inner);
      } else if (in_disc(x, y, r)) {
        out.set(x, y, ring);
      }
    }
  }
  return out;
}

namespace {

json point_json(const std::optional<NormPoint>& p) {
  return p ? json::array({p->x(), p->y()}) : json(nullptr);
}
json point_json(const std::optional<PixelPoint>& p) { return p ? json::array({p->x, p->y}) : json(nullptr); }

std::string note(std::string_view stage, const Error& e) { return fmt::format("{}: {}", stage, e.what()); }

}  // namespace

json StrategyOutcome::to_json() const {
  json j;
  j["ans"] = ans;
  j["p0_norm"] = point_json(p0_norm);
  j["p1_norm"] = point_json(p1_norm);
  j["p0_px"] = point_json(p0_px);
  j["p1_px"] = point_json(p1_px);
  j["s0"] = s0;
  j["s1"] = s1;
  j["sig0"] = sig0 ? signal_to_json(*sig0) : json(nullptr);
  j["sig1"] = sig1 ? signal_to_json(*sig1) : json(nullptr);
  j["chosen"] = chosen ? json(to_string(*chosen)) : json(nullptr);
  j["act"] = point_json(act);
  j["failed"] = failed;
  j["notes"] = notes;
  return j;
}

StrategyOutcome run_edagent(const std::string& question, const SampleView& view, const Raster& image,
                            Backend& comprehender, Backend& grounder, Backend& validator, const RouterConfig& cfg) {
  StrategyOutcome out;
  const auto frame = view.frame();
  const RequestContext base{view.sample_id, view.label, "", 0};

  bool have_ans = false;
  try {
    out.ans = comprehender.comprehend(question, image, base);
    have_ans = true;
  } catch (const Error& e) {
    out.notes.push_back(note("comprehend", e));
  }

  auto ground = [&](const std::string& instruction, std::string variant) -> std::optional<NormPoint> {
    RequestContext ctx = base;
    ctx.variant = std::move(variant);
    return grounder.ground(instruction, image, ctx);
  };
  std::future<std::optional<NormPoint>> g0;
  if (have_ans) g0 = std::async(std::launch::async, ground, out.ans, "answer");
  auto g1 = std::async(std::launch::async, ground, question, "question");

  auto collect = [&](std::future<std::optional<NormPoint>>& f, std::string_view stage) -> std::optional<NormPoint> {
    if (!f.valid()) return std::nullopt;
    try {
      return f.get();
    } catch (const Error& e) {
      out.notes.push_back(note(stage, e));
      return std::nullopt;
    }
  };
  out.p0_norm = collect(g0, "ground_answer");
  out.p1_norm = collect(g1, "ground_question");
  if (out.p0_norm) out.p0_px = denormalize(*out.p0_norm, view.view_meta, frame);
  if (out.p1_norm) out.p1_px = denormalize(*out.p1_norm, view.view_meta, frame);

  if (!out.p0_px && !out.p1_px) {
    out.failed = true;
    out.notes.push_back("router: RouterFailure: no grounding candidate");
    return out;
  }

  auto validate = [&](const PixelPoint& p, std::string variant) {
    RequestContext ctx = base;
    ctx.variant = std::move(variant);
    const auto marked = render_marker(image, p, cfg.marker);
    return validator.validate_click(question, marked, ctx);
  };
  std::future<YesNoSignal> v0, v1;
  if (out.p0_px) v0 = std::async(std::launch::async, validate, *out.p0_px, "p0");
  if (out.p1_px) v1 = std::async(std::launch::async, validate, *out.p1_px, "p1");

  auto score = [&](std::future<YesNoSignal>& f, std::optional<YesNoSignal>& sig, std::string_view stage) {
    if (!f.valid()) return 0.0;
    try {
      sig = f.get();
      return confidence(*sig, cfg.confidence_mode);
    } catch (const Error& e) {
      out.notes.push_back(note(stage, e));
      return 0.0;
    }
  };
  out.s0 = score(v0, out.sig0, "validate_p0");
  out.s1 = score(v1, out.sig1, "validate_p1");

  if (out.p0_px && out.p1_px) {
    out.chosen = select_strategy(out.s0, out.s1, cfg.selection);
  } else {
    out.chosen = out.p0_px ? Strategy::MplusG : Strategy::G;
  }
  out.act = *out.chosen == Strategy::MplusG ? out.p0_px : out.p1_px;
  return out;
}

}  // namespace edabench
