#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>

#include "edabench/core.hpp"
#include "edabench/dispatch.hpp"
#include "edabench/raster.hpp"
#include "json.hpp"

namespace edabench {

enum class Role { Comprehend, Ground, Validate, Judge };
enum class CoordinateSpace { Normalized, AbsolutePixels };
enum class JudgeOrientation { Precision, Recall };

std::string_view to_string(Role r);
std::string_view to_string(CoordinateSpace c);
std::string_view to_string(JudgeOrientation o);
Role parse_role(std::string_view s);
CoordinateSpace parse_coordinate_space(std::string_view s);

struct BackendId {
  std::string name;
  std::set<Role> roles;
  std::optional<CoordinateSpace> coordinate_space;  // required for grounders

  bool has(Role r) const { return roles.count(r) != 0; }
  void check() const;
};

struct Logits {
  double yes = 0.0;
  double no = 0.0;
  friend bool operator==(const Logits&, const Logits&) = default;
};
struct Probabilities {
  double yes = 0.0;
  double no = 0.0;
  friend bool operator==(const Probabilities&, const Probabilities&) = default;
};
struct TextOnly {
  bool yes = false;
  friend bool operator==(const TextOnly&, const TextOnly&) = default;
};

/// The validator's answer in the richest form the endpoint exposed.
using YesNoSignal = std::variant<Logits, Probabilities, TextOnly>;

nlohmann::json signal_to_json(const YesNoSignal& s);

/// Identifies a request for scripted lookup and for the audit trail. Remote
/// backends ignore it.
struct RequestContext {
  std::string sample_id;
  ViewLabel view = ViewLabel::Large;
  std::string variant;  // "answer"/"question" for ground, "p0"/"p1" for validate
  int run = 0;          // judge run index
};

/// One model reply before role-specific parsing. `top_logprobs` holds the
/// alternatives for the first generated token when the endpoint exposes them.
struct Completion {
  std::string text;
  std::map<std::string, double> top_logprobs;
  std::optional<Probabilities> probabilities;
};

struct Prompt {
  Role role = Role::Comprehend;
  std::string text;
  const Raster* image = nullptr;
  bool want_logprobs = false;
  std::optional<double> temperature;
  // Judge requests only: the raw texts, for fixture-free scripted verdicts.
  std::string reference;
  std::string candidate;
  std::optional<JudgeOrientation> orientation;
};

// Prompt templates. These strings are part of the wire contract; changing them
// changes every remote transcript.
std::string comprehend_prompt(std::string_view question);
std::string ground_prompt(std::string_view instruction);
std::string validator_prompt(std::string_view question);
std::string judge_prompt(std::string_view question, std::string_view gt_answer,
                         std::string_view candidate, JudgeOrientation orientation);

/// Ordered cascade: {"x":..,"y":..} object, "(x, y)" pair, "click(x, y)" call,
/// then the first two numbers anywhere. Pixel-space output is divided by the
/// view size. Throws GroundingParseError when nothing matches.
NormPoint parse_ground_output(std::string_view text, CoordinateSpace space, int width, int height);

/// Maps a verdict to {0, 0.5, 1}; throws JudgeParseError otherwise.
double parse_judge_verdict(std::string_view text);

/// Logits when both Yes and No are among the first-token alternatives,
/// Probabilities when the reply carries them (or only one of the two tokens),
/// TextOnly when the reply text is a bare Yes/No. Throws ValidatorParseError.
YesNoSignal signal_from_completion(const Completion& c);

class Backend {
 public:
  explicit Backend(BackendId id);
  virtual ~Backend() = default;
  Backend(const Backend&) = delete;
  Backend& operator=(const Backend&) = delete;

  const BackendId& id() const { return id_; }

  /// Ans = F_M(Q, I). Throws EmptyAnswer on blank output.
  std::string comprehend(std::string_view question, const Raster& image, const RequestContext& ctx);
  /// (x, y) = F_G(instruction, I), always inside [0,1]^2.
  NormPoint ground(std::string_view instruction, const Raster& image, const RequestContext& ctx);
  YesNoSignal validate_click(std::string_view question, const Raster& marked_image, const RequestContext& ctx);
  double judge(std::string_view question, std::string_view gt_answer, std::string_view candidate,
               JudgeOrientation orientation, const RequestContext& ctx);

 protected:
  virtual Completion complete(const Prompt& prompt, const RequestContext& ctx) = 0;

 private:
  void require(Role r) const;
  BackendId id_;
};

/// Deterministic stand-in driven by a fixture file. Replies are a pure
/// function of (backend name, request key); see scripted_key().
///
/// Fixture layout: {"responses": {"<key>": <reply>, ...}} where a reply is a
/// string (reply text), an object {"text", "logprobs": {tok: lp}, "probs":
/// {"Yes": p, "No": p}}, or "!error:<ErrorCode>" to raise that error.
/// Lookup falls back from the exact key to "*" wildcards for view, then
/// sample. Unmatched judge requests use a token-overlap verdict so the
/// scripted judge scores identical texts as 1.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(BackendId id, nlohmann::json fixture);
  static std::unique_ptr<ScriptedBackend> from_file(BackendId id, const std::filesystem::path& path);

  static std::string scripted_key(Role role, const RequestContext& ctx);

  /// Count of complete() calls, by role.
  int calls(Role r) const;

 protected:
  Completion complete(const Prompt& prompt, const RequestContext& ctx) override;

 private:
  const nlohmann::json* lookup(Role role, const RequestContext& ctx) const;
  nlohmann::json responses_;
  mutable std::mutex mu_;
  std::map<Role, int> calls_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Moves one JSON POST. Transport failures are reported as status 0.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const std::map<std::string, std::string>& headers,
                            const std::string& body) = 0;
};

std::unique_ptr<Transport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(120));

struct RemoteEndpoint {
  std::string url;    // full URL of the chat-completions route
  std::string model;  // value of the "model" field
  std::string token;  // bearer token, may be empty for local servers
};

/// Chat-completions style client. 429, 5xx and transport errors are retried
/// by the dispatcher; other statuses fail immediately.
class RemoteBackend : public Backend {
 public:
  RemoteBackend(BackendId id, RemoteEndpoint endpoint, std::shared_ptr<Dispatcher> dispatcher,
                std::unique_ptr<Transport> transport = nullptr);

  static nlohmann::json build_request(const std::string& model, const Prompt& prompt);
  static Completion parse_response(const nlohmann::json& body);

  const RemoteEndpoint& endpoint() const { return endpoint_; }

 protected:
  Completion complete(const Prompt& prompt, const RequestContext& ctx) override;

 private:
  RemoteEndpoint endpoint_;
  std::shared_ptr<Dispatcher> dispatcher_;
  std::unique_ptr<Transport> transport_;
};

/// Name of the environment variable that carries a backend's bearer token.
std::string token_env_var(std::string_view backend_name);

}  // namespace edabench
