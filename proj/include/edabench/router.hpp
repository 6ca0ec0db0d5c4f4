#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edabench/backends.hpp"
#include "edabench/ingestion.hpp"
#include "edabench/raster.hpp"
#include "json.hpp"

namespace edabench {

enum class ConfidenceMode { LogitDiffSigmoid, ProbNormalize, TextHard };
enum class Strategy { MplusG, G };

std::string_view to_string(ConfidenceMode m);
std::string_view to_string(Strategy s);
ConfidenceMode parse_confidence_mode(std::string_view s);

/// Comparative picks the candidate with the higher validator confidence, ties
/// going to G. Threshold(tau) picks M+G iff s0 >= tau and ignores s1.
struct SelectionMode {
  enum class Kind { Comparative, Threshold } kind = Kind::Comparative;
  double tau = 0.0;

  static SelectionMode comparative() { return {}; }
  static SelectionMode threshold(double tau);
};

struct MarkerStyle {
  Rgb inner{255, 0, 0};
  int ring_width = 2;
  std::optional<int> radius;  // overrides the size rule when set

  /// max(4, round(0.005 * min(W, H))) unless overridden.
  int radius_for(int width, int height) const;
};

struct RouterConfig {
  SelectionMode selection;
  MarkerStyle marker;
  ConfidenceMode confidence_mode = ConfidenceMode::LogitDiffSigmoid;
};

/// Full trace of one routed decision. Candidate 0 comes from grounding the
/// comprehender's answer (M+G), candidate 1 from grounding the raw question (G).
struct StrategyOutcome {
  std::string ans;
  std::optional<NormPoint> p0_norm, p1_norm;
  std::optional<PixelPoint> p0_px, p1_px;
  double s0 = 0.0;
  double s1 = 0.0;
  std::optional<YesNoSignal> sig0, sig1;
  std::optional<Strategy> chosen;
  std::optional<PixelPoint> act;
  bool failed = false;  // RouterFailure: no candidate survived
  std::vector<std::string> notes;  // "<stage>: <ErrorCode>: message"

  nlohmann::json to_json() const;
};

/// Maps a validator signal to [0,1]. TextHard accepts every signal kind; the
/// other modes throw ConfidenceModeError on a mismatched kind.
double confidence(const YesNoSignal& sig, ConfidenceMode mode);

Strategy select_strategy(double s0, double s1, const SelectionMode& mode);

/// Copy of image with a filled disc centred on p: solid inner colour, ring
/// coloured as the complement of the mean background under the marker.
Raster render_marker(const Raster& image, const PixelPoint& p, const MarkerStyle& style);

/// One EDAgent decision on one view. Never throws for backend failures: those
/// degrade (comprehend failure -> G only; one grounding failure -> the other
/// candidate; validator failure -> that confidence is 0) or, when both
/// groundings fail, yield an outcome with failed = true.
StrategyOutcome run_edagent(const std::string& question, const SampleView& view, const Raster& image,
                            Backend& comprehender, Backend& grounder, Backend& validator, const RouterConfig& cfg);

}  // namespace edabench
