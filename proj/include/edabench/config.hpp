#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edabench/backends.hpp"
#include "edabench/dispatch.hpp"
#include "edabench/router.hpp"
#include "json.hpp"

namespace edabench {

struct BackendConfig {
  std::string name;
  std::string kind;  // "scripted" or "remote"
  std::set<Role> roles;
  std::optional<CoordinateSpace> coordinate_space;
  std::filesystem::path fixture;  // scripted
  std::string endpoint;           // remote
  std::string model;              // remote
  std::string token_env;          // remote; defaults to token_env_var(name)
};

struct AgentConfig {
  std::string name;
  std::string kind;  // "edagent" or "single"
  std::string comprehender, grounder, validator;  // edagent
  std::string answerer;  // single; optional (grounding-only agents have no answer)
};

struct Config {
  std::filesystem::path source;   // the file it came from, if any
  std::filesystem::path dataset;  // manifest path, resolved against the config dir
  std::vector<BackendConfig> backends;
  std::vector<AgentConfig> agents;
  std::string judge;
  int judge_runs = 5;
  RouterConfig router;
  RetryPolicy retry;
  std::vector<ViewLabel> views{ViewLabel::Large, ViewLabel::Middle, ViewLabel::Small};
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs";
  int top_k = 6;
  int workers = 4;
  std::string digest;  // sha256 of the uninterpolated config text

  const BackendConfig& backend(std::string_view name) const;
  const AgentConfig& agent(std::string_view name) const;
  bool all_scripted() const;
};

/// Replaces every ${VAR} in s with the environment value. Unset variables
/// raise ConfigError.
std::string interpolate_env(std::string_view s);

Config parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
Config load_config(const std::filesystem::path& path);

/// Constructed backends plus the shared dispatcher.
struct BackendSet {
  std::shared_ptr<Dispatcher> dispatcher;
  std::map<std::string, std::shared_ptr<Backend>> by_name;
  nlohmann::json fingerprints;  // name -> description without secrets

  Backend& at(const std::string& name) const;
};

/// Fails fast with ConfigError on a missing token variable or, when
/// scripted_only is set, on any remote backend.
BackendSet build_backends(const Config& cfg, bool scripted_only);

}  // namespace edabench
