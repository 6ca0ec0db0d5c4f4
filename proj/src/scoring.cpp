#include "edabench/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <map>

namespace edabench {

using nlohmann::json;

ActionScore score_action(const PixelPoint& act, const BBox& gt) {
  if (act.frame != gt.frame) {
    throw Error(ErrorCode::ContractViolation,
                fmt::format("action in frame '{}' scored against box in frame '{}'", act.frame.name, gt.frame.name));
  }
  ActionScore s;
  s.action_h = gt.x_min <= act.x && act.x <= gt.x_max ? 1 : 0;
  s.action_v = gt.y_min <= act.y && act.y <= gt.y_max ? 1 : 0;
  s.action = s.action_h * s.action_v;
  return s;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& runs) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : runs) {
    if (r) {
      sum += *r;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

int AnswerScore::valid_runs(JudgeOrientation o) const {
  const auto& v = o == JudgeOrientation::Precision ? precision_runs : recall_runs;
  return static_cast<int>(std::count_if(v.begin(), v.end(), [](const auto& r) { return r.has_value(); }));
}

AnswerScore score_answer(Backend& judge, const std::string& question, const std::string& gt_answer,
                         const std::string& candidate, int runs, const RequestContext& ctx, int parse_retries) {
  if (runs < 1) throw Error(ErrorCode::ConfigError, "judge runs must be >= 1");
  AnswerScore out;
  for (auto orientation : {JudgeOrientation::Precision, JudgeOrientation::Recall}) {
    auto& dest = orientation == JudgeOrientation::Precision ? out.precision_runs : out.recall_runs;
    for (int run = 0; run < runs; ++run) {
      RequestContext c = ctx;
      c.variant = std::string(to_string(orientation));
      c.run = run;
      std::optional<double> verdict;
      for (int attempt = 0; attempt <= parse_retries; ++attempt) {
        try {
          verdict = judge.judge(question, gt_answer, candidate, orientation, c);
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::JudgeParseError) break;
        }
      }
      dest.push_back(verdict);
    }
  }
  out.precision = mean_of(out.precision_runs);
  out.recall = mean_of(out.recall_runs);
  if (out.precision && out.recall) {
    out.answer = (*out.precision + *out.recall) / 2.0;
  } else {
    out.precision.reset();
    out.recall.reset();
  }
  return out;
}

namespace {

json runs_json(const std::vector<std::optional<double>>& runs) {
  json a = json::array();
  for (const auto& r : runs) a.push_back(r ? json(*r) : json(nullptr));
  return a;
}

std::vector<std::optional<double>> runs_from_json(const json& a) {
  std::vector<std::optional<double>> out;
  for (const auto& v : a) out.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json ScoreRecord::to_json() const {
  json j;
  j["sample_id"] = sample_id;
  j["view"] = to_string(view);
  j["agent"] = agent;
  j["combo"] = combo.name();
  j["difficulty"] = to_string(difficulty);
  j["answer_precision"] = opt(answer.precision);
  j["answer_recall"] = opt(answer.recall);
  j["answer"] = opt(answer.answer);
  j["precision_runs"] = runs_json(answer.precision_runs);
  j["recall_runs"] = runs_json(answer.recall_runs);
  j["action"] = action.action;
  j["action_h"] = action.action_h;
  j["action_v"] = action.action_v;
  j["answer_error"] = answer_error ? json(*answer_error) : json(nullptr);
  return j;
}

ScoreRecord ScoreRecord::from_json(const json& j) {
  ScoreRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.view = parse_view(j.at("view").get<std::string>());
  r.agent = j.at("agent").get<std::string>();
  r.combo = ComboTag::from_name(j.at("combo").get<std::string>());
  r.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
  r.answer.precision_runs = runs_from_json(j.at("precision_runs"));
  r.answer.recall_runs = runs_from_json(j.at("recall_runs"));
  auto get_opt = [&](const char* k) {
    const auto& v = j.at(k);
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  };
  r.answer.precision = get_opt("answer_precision");
  r.answer.recall = get_opt("answer_recall");
  r.answer.answer = get_opt("answer");
  r.action = {j.at("action").get<int>(), j.at("action_h").get<int>(), j.at("action_v").get<int>()};
  if (const auto& e = j.at("answer_error"); !e.is_null()) r.answer_error = e.get<std::string>();
  return r;
}

std::string_view to_string(GroupDim d) {
  switch (d) {
    case GroupDim::Combo: return "combo";
    case GroupDim::Software: return "software";
    case GroupDim::Field: return "field";
    case GroupDim::Difficulty: return "difficulty";
    case GroupDim::Resolution: return "resolution";
    case GroupDim::Agent: return "agent";
  }
  return "?";
}

GroupDim parse_group_dim(std::string_view s) {
  for (auto d : {GroupDim::Combo, GroupDim::Software, GroupDim::Field, GroupDim::Difficulty, GroupDim::Resolution,
                 GroupDim::Agent}) {
    if (s == to_string(d)) return d;
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown group dimension '{}'", s));
}

std::string AggregateRow::key_label() const {
  std::string out;
  for (const auto& k : key) {
    if (!out.empty()) out += "/";
    out += k.label;
  }
  return out.empty() ? "All" : out;
}

std::optional<std::string> AggregateRow::value(GroupDim d) const {
  for (const auto& k : key) {
    if (k.dim == d) return k.label;
  }
  return std::nullopt;
}

namespace {

KeyPart key_part(const ScoreRecord& r, GroupDim d) {
  switch (d) {
    case GroupDim::Combo: return {d, r.combo.name(), r.combo.index()};
    case GroupDim::Software:
      return {d, std::string(to_string(r.combo.software())), static_cast<int>(r.combo.software())};
    case GroupDim::Field: return {d, std::string(to_string(r.combo.field())), static_cast<int>(r.combo.field())};
    case GroupDim::Difficulty:
      return {d, std::string(to_string(r.difficulty)), static_cast<int>(r.difficulty)};
    case GroupDim::Resolution: return {d, std::string(to_string(r.view)), static_cast<int>(r.view)};
    case GroupDim::Agent: return {d, r.agent, 0};
  }
  return {d, "", 0};
}

bool key_less(const std::vector<KeyPart>& a, const std::vector<KeyPart>& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i].ordinal != b[i].ordinal) return a[i].ordinal < b[i].ordinal;
    if (a[i].label != b[i].label) return a[i].label < b[i].label;
  }
  return a.size() < b.size();
}

struct Accumulator {
  std::vector<KeyPart> key;
  double n = 0, n_answer = 0;
  double answer = 0, precision = 0, recall = 0, action = 0, action_h = 0, action_v = 0;

  AggregateRow finish() const {
    AggregateRow row;
    row.key = key;
    row.n = static_cast<int>(n);
    row.n_answer = static_cast<int>(n_answer);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.mean_answer = n_answer > 0 ? answer / n_answer : nan;
    row.mean_precision = n_answer > 0 ? precision / n_answer : nan;
    row.mean_recall = n_answer > 0 ? recall / n_answer : nan;
    row.mean_action = action / n;
    row.mean_action_h = action_h / n;
    row.mean_action_v = action_v / n;
    return row;
  }
};

std::vector<AggregateRow> finish_all(std::vector<Accumulator>& acc) {
  std::sort(acc.begin(), acc.end(), [](const Accumulator& a, const Accumulator& b) { return key_less(a.key, b.key); });
  std::vector<AggregateRow> rows;
  rows.reserve(acc.size());
  for (const auto& a : acc) rows.push_back(a.finish());
  return rows;
}

Accumulator& slot(std::vector<Accumulator>& acc, std::map<std::string, std::size_t>& index,
                  std::vector<KeyPart> key) {
  std::string id;
  for (const auto& k : key) id += fmt::format("{}={}\x1f", to_string(k.dim), k.label);
  auto [it, fresh] = index.emplace(id, acc.size());
  if (fresh) acc.push_back(Accumulator{std::move(key)});
  return acc[it->second];
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<ScoreRecord>& records, const std::vector<GroupDim>& group_by) {
  std::vector<Accumulator> acc;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    std::vector<KeyPart> key;
    for (auto d : group_by) key.push_back(key_part(r, d));
    auto& a = slot(acc, index, std::move(key));
    a.n += 1;
    a.action += r.action.action;
    a.action_h += r.action.action_h;
    a.action_v += r.action.action_v;
    if (r.answer.available()) {
      a.n_answer += 1;
      a.answer += *r.answer.answer;
      a.precision += *r.answer.precision;
      a.recall += *r.answer.recall;
    }
  }
  return finish_all(acc);
}

std::vector<AggregateRow> rollup(const std::vector<AggregateRow>& rows, const std::vector<GroupDim>& group_by) {
  std::vector<Accumulator> acc;
  std::map<std::string, std::size_t> index;
  for (const auto& row : rows) {
    std::vector<KeyPart> key;
    for (auto d : group_by) {
      auto it = std::find_if(row.key.begin(), row.key.end(), [&](const KeyPart& k) { return k.dim == d; });
      if (it == row.key.end()) {
        throw Error(ErrorCode::ContractViolation,
                    fmt::format("cannot roll up to '{}': rows are not keyed by it", to_string(d)));
      }
      key.push_back(*it);
    }
    auto& a = slot(acc, index, std::move(key));
    a.n += row.n;
    a.action += row.mean_action * row.n;
    a.action_h += row.mean_action_h * row.n;
    a.action_v += row.mean_action_v * row.n;
    if (row.n_answer > 0) {
      a.n_answer += row.n_answer;
      a.answer += row.mean_answer * row.n_answer;
      a.precision += row.mean_precision * row.n_answer;
      a.recall += row.mean_recall * row.n_answer;
    }
  }
  return finish_all(acc);
}

}  // namespace edabench
