#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edabench/backends.hpp"
#include "edabench/core.hpp"
#include "json.hpp"

namespace edabench {

struct ActionScore {
  int action = 0;
  int action_h = 0;
  int action_v = 0;
  friend bool operator==(const ActionScore&, const ActionScore&) = default;
};

/// Inclusive point-in-box test split per axis; action = action_h * action_v.
ActionScore score_action(const PixelPoint& act, const BBox& gt);

/// Judge verdicts for one candidate. Abstained runs are stored as nullopt and
/// excluded from the means; when either orientation has no usable run the
/// score is unavailable and precision/recall/answer are empty.
struct AnswerScore {
  std::vector<std::optional<double>> precision_runs;
  std::vector<std::optional<double>> recall_runs;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> answer;

  bool available() const { return answer.has_value(); }
  int valid_runs(JudgeOrientation o) const;
};

/// Issues `runs` precision-oriented and `runs` recall-oriented verdicts.
/// A JudgeParseError is retried up to parse_retries times before the run is
/// counted as an abstention; a backend failure abstains immediately.
AnswerScore score_answer(Backend& judge, const std::string& question, const std::string& gt_answer,
                         const std::string& candidate, int runs = 5, const RequestContext& ctx = {},
                         int parse_retries = 2);

/// Arithmetic mean of the available verdicts; nullopt when none.
std::optional<double> mean_of(const std::vector<std::optional<double>>& runs);

struct ScoreRecord {
  std::string sample_id;
  ViewLabel view = ViewLabel::Large;
  std::string agent;
  ComboTag combo{SoftwareTag::COMSOL, FieldTag::Acoustic};
  DifficultyTag difficulty = DifficultyTag::Normal;
  AnswerScore answer;
  ActionScore action;
  std::optional<std::string> answer_error;

  nlohmann::json to_json() const;
  static ScoreRecord from_json(const nlohmann::json& j);
};

enum class GroupDim { Combo, Software, Field, Difficulty, Resolution, Agent };
std::string_view to_string(GroupDim d);
GroupDim parse_group_dim(std::string_view s);

struct KeyPart {
  GroupDim dim;
  std::string label;
  int ordinal = 0;  // canonical position; agents sort by label
  friend bool operator==(const KeyPart&, const KeyPart&) = default;
};

struct AggregateRow {
  std::vector<KeyPart> key;
  int n = 0;          // records in the group
  int n_answer = 0;   // records with an available answer score
  double mean_answer = 0.0;  // NaN when n_answer == 0
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_action = 0.0;
  double mean_action_h = 0.0;
  double mean_action_v = 0.0;

  std::string key_label() const;  // "CO-Acoustic/Large"
  std::optional<std::string> value(GroupDim d) const;
};

/// One row per distinct key, sorted by canonical key order.
std::vector<AggregateRow> aggregate(const std::vector<ScoreRecord>& records, const std::vector<GroupDim>& group_by);

/// Re-groups finer rows into a coarser key, weighting each row by its counts.
/// Equal to aggregate() on the underlying records whenever the keys nest.
std::vector<AggregateRow> rollup(const std::vector<AggregateRow>& rows, const std::vector<GroupDim>& group_by);

}  // namespace edabench
