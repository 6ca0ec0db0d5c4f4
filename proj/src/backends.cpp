#include "edabench/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <regex>
#include <set>

namespace edabench {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Strips whitespace and trailing punctuation, lowercases: " Yes." -> "yes".
std::string normalize_token(std::string_view tok) {
  auto t = lower(trim(tok));
  while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.back()))) t.pop_back();
  while (!t.empty() && std::ispunct(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
  return t;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Fraction of `from`'s distinct words that also occur in `in`.
double coverage(std::string_view from, std::string_view in) {
  const auto a = words(from);
  const auto b = words(in);
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty()) return sb.empty() ? 1.0 : 0.0;
  const auto hit = std::count_if(sa.begin(), sa.end(), [&](const std::string& w) { return sb.count(w) != 0; });
  return static_cast<double>(hit) / static_cast<double>(sa.size());
}

const std::string kNum = R"(([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))";

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Comprehend: return "comprehend";
    case Role::Ground: return "ground";
    case Role::Validate: return "validate";
    case Role::Judge: return "judge";
  }
  return "?";
}

std::string_view to_string(CoordinateSpace c) {
  return c == CoordinateSpace::Normalized ? "normalized" : "absolute_pixels";
}

std::string_view to_string(JudgeOrientation o) {
  return o == JudgeOrientation::Precision ? "precision" : "recall";
}

Role parse_role(std::string_view s) {
  const auto l = lower(s);
  for (auto r : {Role::Comprehend, Role::Ground, Role::Validate, Role::Judge}) {
    if (l == to_string(r)) return r;
  }
  throw Error(ErrorCode::ConfigError, fmt::format("unknown role '{}'", s));
}

CoordinateSpace parse_coordinate_space(std::string_view s) {
  const auto l = lower(s);
  if (l == "normalized") return CoordinateSpace::Normalized;
  if (l == "absolute_pixels" || l == "absolute" || l == "pixels") return CoordinateSpace::AbsolutePixels;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown coordinate space '{}'", s));
}

void BackendId::check() const {
  if (name.empty()) throw Error(ErrorCode::ConfigError, "backend without a name");
  if (has(Role::Ground) && !coordinate_space) {
    throw Error(ErrorCode::ConfigError, fmt::format("grounder '{}' must declare a coordinate space", name));
  }
}

json signal_to_json(const YesNoSignal& s) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Logits>) {
          return {{"kind", "logits"}, {"yes", v.yes}, {"no", v.no}};
        } else if constexpr (std::is_same_v<T, Probabilities>) {
          return {{"kind", "probabilities"}, {"yes", v.yes}, {"no", v.no}};
        } else {
          return {{"kind", "text"}, {"token", v.yes ? "Yes" : "No"}};
        }
      },
      s);
}

std::string comprehend_prompt(std::string_view question) {
  return fmt::format(
      "You are operating professional CAD software. The screenshot shows the current interface.\n"
      "Task: {}\n"
      "Describe the single next GUI operation that accomplishes the task as a concise 5-10 word "
      "operational description. Reply with the description only.",
      question);
}

std::string ground_prompt(std::string_view instruction) {
  return fmt::format(
      "Locate the GUI element to click for this instruction: {}\n"
      "Reply with the click point as (x, y).",
      instruction);
}

std::string validator_prompt(std::string_view question) {
  return fmt::format(
      "The red marker shows a proposed click for this task: {}. Does clicking there accomplish the "
      "task? Answer Yes or No.",
      question);
}

std::string judge_prompt(std::string_view question, std::string_view gt_answer, std::string_view candidate,
                         JudgeOrientation orientation) {
  const std::string_view ask =
      orientation == JudgeOrientation::Precision
          ? "Is every claim in the candidate supported by the reference?"
          : "Does the candidate cover the reference's required operation?";
  return fmt::format(
      "You grade answers to a CAD software operation question.\n"
      "Question: {}\nReference answer: {}\nCandidate answer: {}\n"
      "{}\n"
      "Reply with exactly one word: FULL (full compliance), PARTIAL (partial compliance) or NONE "
      "(non-compliance).",
      question, gt_answer, candidate, ask);
}

NormPoint parse_ground_output(std::string_view text, CoordinateSpace space, int width, int height) {
  static const std::regex structured(R"re("?x"?\s*[:=]\s*)re" + kNum + R"re(\s*[,;]?\s*"?y"?\s*[:=]\s*)re" + kNum,
                                     std::regex::icase);
  static const std::regex pair(R"(\(\s*)" + kNum + R"(\s*,\s*)" + kNum + R"(\s*\))");
  static const std::regex call(R"(click\s*\(\s*(?:x\s*=\s*)?)" + kNum + R"(\s*,\s*(?:y\s*=\s*)?)" + kNum +
                                   R"(\s*\))",
                               std::regex::icase);
  static const std::regex number(kNum);

  const std::string s(text);
  std::optional<std::pair<double, double>> xy;
  std::smatch m;
  for (const auto* re : {&structured, &pair, &call}) {
    if (std::regex_search(s, m, *re)) {
      xy = {std::stod(m[1].str()), std::stod(m[2].str())};
      break;
    }
  }
  if (!xy) {
    std::vector<double> nums;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), number); it != std::sregex_iterator() && nums.size() < 2;
         ++it) {
      nums.push_back(std::stod((*it)[1].str()));
    }
    if (nums.size() == 2) xy = {nums[0], nums[1]};
  }
  if (!xy) {
    throw Error(ErrorCode::GroundingParseError, fmt::format("no coordinates in '{}'", trim(text).substr(0, 120)));
  }
  if (space == CoordinateSpace::AbsolutePixels) {
    return NormPoint(xy->first / width, xy->second / height);
  }
  return NormPoint(xy->first, xy->second);
}

double parse_judge_verdict(std::string_view text) {
  static const std::regex verdict(
      R"((non[-\s]?compliance)|(partial)|(full)|(none)|(?:^|[^\d.])(0\.5|1(?:\.0+)?|0(?:\.0+)?)(?![\d.]))",
      std::regex::icase);
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, verdict)) {
    throw Error(ErrorCode::JudgeParseError, fmt::format("no verdict in '{}'", trim(text).substr(0, 120)));
  }
  if (m[1].matched || m[4].matched) return 0.0;
  if (m[2].matched) return 0.5;
  if (m[3].matched) return 1.0;
  return std::stod(m[5].str());
}

YesNoSignal signal_from_completion(const Completion& c) {
  std::optional<double> yes, no;
  for (const auto& [tok, lp] : c.top_logprobs) {
    const auto t = normalize_token(tok);
    if (t == "yes") yes = yes ? std::max(*yes, lp) : lp;
    if (t == "no") no = no ? std::max(*no, lp) : lp;
  }
  if (yes && no) return Logits{*yes, *no};
  if (c.probabilities) return *c.probabilities;
  if (yes || no) {
    return Probabilities{yes ? std::exp(*yes) : 0.0, no ? std::exp(*no) : 0.0};
  }
  const auto t = normalize_token(c.text);
  if (t == "yes") return TextOnly{true};
  if (t == "no") return TextOnly{false};
  const auto w = words(c.text);
  if (!w.empty() && (w.front() == "yes" || w.front() == "no")) return TextOnly{w.front() == "yes"};
  throw Error(ErrorCode::ValidatorParseError, fmt::format("no Yes/No in '{}'", trim(c.text).substr(0, 120)));
}

Backend::Backend(BackendId id) : id_(std::move(id)) { id_.check(); }

void Backend::require(Role r) const {
  if (!id_.has(r)) {
    throw Error(ErrorCode::ContractViolation, fmt::format("backend '{}' lacks the {} role", id_.name, to_string(r)));
  }
}

std::string Backend::comprehend(std::string_view question, const Raster& image, const RequestContext& ctx) {
  require(Role::Comprehend);
  Prompt p;
  p.role = Role::Comprehend;
  p.text = comprehend_prompt(question);
  p.image = &image;
  auto text = trim(complete(p, ctx).text);
  if (text.empty()) throw Error(ErrorCode::EmptyAnswer, fmt::format("{} returned no answer", id_.name));
  return text;
}

NormPoint Backend::ground(std::string_view instruction, const Raster& image, const RequestContext& ctx) {
  require(Role::Ground);
  Prompt p;
  p.role = Role::Ground;
  p.text = ground_prompt(instruction);
  p.image = &image;
  return parse_ground_output(complete(p, ctx).text, *id_.coordinate_space, image.width(), image.height());
}

YesNoSignal Backend::validate_click(std::string_view question, const Raster& marked_image,
                                    const RequestContext& ctx) {
  require(Role::Validate);
  Prompt p;
  p.role = Role::Validate;
  p.text = validator_prompt(question);
  p.image = &marked_image;
  p.want_logprobs = true;
  p.temperature = 0.0;
  return signal_from_completion(complete(p, ctx));
}

double Backend::judge(std::string_view question, std::string_view gt_answer, std::string_view candidate,
                      JudgeOrientation orientation, const RequestContext& ctx) {
  require(Role::Judge);
  Prompt p;
  p.role = Role::Judge;
  p.text = judge_prompt(question, gt_answer, candidate, orientation);
  p.temperature = 0.0;
  p.reference = gt_answer;
  p.candidate = candidate;
  p.orientation = orientation;
  return parse_judge_verdict(complete(p, ctx).text);
}

ScriptedBackend::ScriptedBackend(BackendId id, json fixture) : Backend(std::move(id)) {
  if (fixture.is_object() && fixture.contains("responses")) {
    responses_ = std::move(fixture["responses"]);
  } else {
    responses_ = json::object();
  }
  if (!responses_.is_object()) {
    throw Error(ErrorCode::ConfigError, fmt::format("fixture for '{}' has non-object responses", this->id().name));
  }
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(BackendId id, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open fixture '{}'", path.string()));
  try {
    return std::make_unique<ScriptedBackend>(std::move(id), json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("fixture '{}': {}", path.string(), e.what()));
  }
}

std::string ScriptedBackend::scripted_key(Role role, const RequestContext& ctx) {
  auto key = fmt::format("{}:{}:{}", to_string(role), ctx.sample_id, to_string(ctx.view));
  if (!ctx.variant.empty()) key += ":" + ctx.variant;
  if (role == Role::Judge) key += fmt::format("#{}", ctx.run);
  return key;
}

const json* ScriptedBackend::lookup(Role role, const RequestContext& ctx) const {
  const std::string suffix = ctx.variant.empty() ? "" : ":" + ctx.variant;
  const std::string view(to_string(ctx.view));
  const std::array<std::pair<std::string, std::string>, 3> scopes{{
      {ctx.sample_id, view},
      {ctx.sample_id, "*"},
      {"*", "*"},
  }};
  for (const auto& [sample, v] : scopes) {
    const auto base = fmt::format("{}:{}:{}{}", to_string(role), sample, v, suffix);
    if (role == Role::Judge) {
      if (auto it = responses_.find(fmt::format("{}#{}", base, ctx.run)); it != responses_.end()) return &*it;
    }
    if (auto it = responses_.find(base); it != responses_.end()) return &*it;
  }
  return nullptr;
}

int ScriptedBackend::calls(Role r) const {
  std::lock_guard lock(mu_);
  auto it = calls_.find(r);
  return it == calls_.end() ? 0 : it->second;
}

Completion ScriptedBackend::complete(const Prompt& prompt, const RequestContext& ctx) {
  {
    std::lock_guard lock(mu_);
    ++calls_[prompt.role];
  }
  const json* reply = lookup(prompt.role, ctx);
  if (reply == nullptr) {
    if (prompt.role == Role::Judge && prompt.orientation) {
      const double c = *prompt.orientation == JudgeOrientation::Precision
                           ? coverage(prompt.candidate, prompt.reference)
                           : coverage(prompt.reference, prompt.candidate);
      Completion out;
      out.text = c >= 0.999 ? "FULL" : c >= 0.5 ? "PARTIAL" : "NONE";
      return out;
    }
    throw Error(ErrorCode::BackendUnavailable,
                fmt::format("{} has no scripted reply for '{}'", id().name, scripted_key(prompt.role, ctx)));
  }
  if (reply->is_string()) {
    const auto& text = reply->get_ref<const std::string&>();
    constexpr std::string_view err = "!error:";
    if (text.rfind(err, 0) == 0) {
      const auto code = error_code_from_string(std::string_view(text).substr(err.size()));
      throw Error(code, fmt::format("scripted failure for '{}'", scripted_key(prompt.role, ctx)));
    }
    Completion out;
    out.text = text;
    return out;
  }
  if (!reply->is_object()) {
    throw Error(ErrorCode::ConfigError, fmt::format("bad scripted reply for '{}'", scripted_key(prompt.role, ctx)));
  }
  Completion c;
  c.text = reply->value("text", std::string{});
  if (auto it = reply->find("logprobs"); it != reply->end()) {
    for (const auto& [tok, lp] : it->items()) c.top_logprobs[tok] = lp.get<double>();
  }
  if (auto it = reply->find("probs"); it != reply->end()) {
    c.probabilities = Probabilities{it->value("Yes", 0.0), it->value("No", 0.0)};
  }
  return c;
}

std::string token_env_var(std::string_view backend_name) {
  std::string out = "EDABENCH_TOKEN_";
  for (char ch : backend_name) {
    const auto c = static_cast<unsigned char>(ch);
    out += std::isalnum(c) ? static_cast<char>(std::toupper(c)) : '_';
  }
  return out;
}

}  // namespace edabench
