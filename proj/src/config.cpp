#include "edabench/config.hpp"

#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "edabench/raster.hpp"

namespace edabench {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

json interpolate_all(const json& j) {
  if (j.is_string()) return interpolate_env(j.get<std::string>());
  if (j.is_array()) {
    json out = json::array();
    for (const auto& v : j) out.push_back(interpolate_all(v));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = interpolate_all(it.value());
    return out;
  }
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    bad(fmt::format("'{}' has the wrong type", key));
  }
}

std::string need_string(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key) || !j[key].is_string()) bad(fmt::format("{}: missing string '{}'", where, key));
  return j[key].get<std::string>();
}

template <typename F>
auto parsed(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    bad(e.what());
  }
}

}  // namespace

std::string interpolate_env(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto open = s.find("${", i);
    if (open == std::string_view::npos) {
      out.append(s.substr(i));
      break;
    }
    const auto close = s.find('}', open + 2);
    if (close == std::string_view::npos) bad(fmt::format("unterminated ${{ in '{}'", s));
    out.append(s.substr(i, open - i));
    const std::string var(s.substr(open + 2, close - open - 2));
    const char* value = std::getenv(var.c_str());
    if (value == nullptr) bad(fmt::format("environment variable {} is not set", var));
    out.append(value);
    i = close + 1;
  }
  return out;
}

const BackendConfig& Config::backend(std::string_view name) const {
  for (const auto& b : backends)
    if (b.name == name) return b;
  bad(fmt::format("unknown backend '{}'", name));
}

const AgentConfig& Config::agent(std::string_view name) const {
  for (const auto& a : agents)
    if (a.name == name) return a;
  bad(fmt::format("unknown agent '{}'", name));
}

bool Config::all_scripted() const {
  return std::all_of(backends.begin(), backends.end(), [](const auto& b) { return b.kind == "scripted"; });
}

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json raw;
  try {
    raw = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!raw.is_object()) bad("config must be a JSON object");

  Config c;
  c.digest = sha256_hex(std::string_view(text));
  const json j = interpolate_all(raw);

  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  c.dataset = resolve(need_string(j, "dataset", "config"));

  if (!j.contains("backends") || !j["backends"].is_array()) bad("config: 'backends' must be an array");
  for (const auto& b : j["backends"]) {
    BackendConfig bc;
    bc.name = need_string(b, "name", "backend");
    const auto where = fmt::format("backend '{}'", bc.name);
    bc.kind = get_or<std::string>(b, "kind", "remote");
    if (bc.kind != "scripted" && bc.kind != "remote") bad(fmt::format("{}: kind must be scripted or remote", where));
    if (!b.contains("roles") || !b["roles"].is_array() || b["roles"].empty()) bad(where + ": 'roles' must be a non-empty array");
    for (const auto& r : b["roles"]) {
      if (!r.is_string()) bad(where + ": roles must be strings");
      bc.roles.insert(parsed([&] { return parse_role(r.get<std::string>()); }));
    }
    if (b.contains("coordinate_space")) {
      bc.coordinate_space = parsed([&] { return parse_coordinate_space(need_string(b, "coordinate_space", where)); });
    }
    if (bc.kind == "scripted") {
      bc.fixture = resolve(need_string(b, "fixture", where));
    } else {
      bc.endpoint = need_string(b, "endpoint", where);
      bc.model = get_or<std::string>(b, "model", "");
      bc.token_env = get_or<std::string>(b, "token_env", token_env_var(bc.name));
    }
    parsed([&] {
      BackendId{bc.name, bc.roles, bc.coordinate_space}.check();
      return 0;
    });
    for (const auto& prev : c.backends)
      if (prev.name == bc.name) bad(fmt::format("duplicate backend '{}'", bc.name));
    c.backends.push_back(std::move(bc));
  }

  if (!j.contains("agents") || !j["agents"].is_array() || j["agents"].empty()) bad("config: 'agents' must be a non-empty array");
  auto need_role = [&](const std::string& backend, Role role, const std::string& agent) {
    const auto& b = c.backend(backend);
    if (!b.roles.count(role)) {
      bad(fmt::format("agent '{}': backend '{}' lacks role {}", agent, backend, to_string(role)));
    }
  };
  for (const auto& a : j["agents"]) {
    AgentConfig ac;
    ac.name = need_string(a, "name", "agent");
    const auto where = fmt::format("agent '{}'", ac.name);
    if (ac.name.find_first_of("/\\\t\n") != std::string::npos || ac.name.empty()) bad(where + ": bad name");
    ac.kind = get_or<std::string>(a, "kind", "single");
    if (ac.kind == "edagent") {
      ac.comprehender = need_string(a, "comprehender", where);
      ac.grounder = need_string(a, "grounder", where);
      ac.validator = need_string(a, "validator", where);
      need_role(ac.comprehender, Role::Comprehend, ac.name);
      need_role(ac.grounder, Role::Ground, ac.name);
      need_role(ac.validator, Role::Validate, ac.name);
    } else if (ac.kind == "single") {
      ac.grounder = need_string(a, "grounder", where);
      ac.answerer = get_or<std::string>(a, "answerer", "");
      need_role(ac.grounder, Role::Ground, ac.name);
      if (!ac.answerer.empty()) need_role(ac.answerer, Role::Comprehend, ac.name);
    } else {
      bad(where + ": kind must be edagent or single");
    }
    for (const auto& prev : c.agents)
      if (prev.name == ac.name) bad(fmt::format("duplicate agent '{}'", ac.name));
    c.agents.push_back(std::move(ac));
  }

  c.judge = need_string(j, "judge", "config");
  need_role(c.judge, Role::Judge, "judge");
  c.judge_runs = get_or<int>(j, "judge_runs", 5);
  if (c.judge_runs < 1) bad("judge_runs must be >= 1");

  if (j.contains("router")) {
    const auto& r = j["router"];
    const auto sel = get_or<std::string>(r, "selection", "comparative");
    if (sel == "comparative") {
      c.router.selection = SelectionMode::comparative();
    } else if (sel == "threshold") {
      if (!r.contains("tau")) bad("router: threshold selection needs 'tau'");
      c.router.selection = parsed([&] { return SelectionMode::threshold(get_or<double>(r, "tau", 0.5)); });
    } else {
      bad(fmt::format("router: unknown selection '{}'", sel));
    }
    c.router.confidence_mode =
        parsed([&] { return parse_confidence_mode(get_or<std::string>(r, "confidence_mode", "logit_diff_sigmoid")); });
    if (r.contains("marker_radius")) {
      const int radius = get_or<int>(r, "marker_radius", 0);
      if (radius < 1) bad("router: marker_radius must be >= 1");
      c.router.marker.radius = radius;
    }
  }

  if (j.contains("retry")) {
    const auto& r = j["retry"];
    c.retry.max_attempts = get_or<int>(r, "max_attempts", c.retry.max_attempts);
    c.retry.base_backoff = std::chrono::milliseconds(get_or<long>(r, "base_backoff_ms", c.retry.base_backoff.count()));
    c.retry.backoff_factor = get_or<double>(r, "backoff_factor", c.retry.backoff_factor);
    c.retry.per_backend_rate = get_or<double>(r, "per_backend_rate", c.retry.per_backend_rate);
    c.retry.max_in_flight = get_or<int>(r, "max_in_flight", c.retry.max_in_flight);
  }
  parsed([&] {
    c.retry.check();
    return 0;
  });

  if (j.contains("views")) {
    if (!j["views"].is_array() || j["views"].empty()) bad("config: 'views' must be a non-empty array");
    c.views.clear();
    for (const auto& v : j["views"]) {
      if (!v.is_string()) bad("config: views must be strings");
      c.views.push_back(parsed([&] { return parse_view(v.get<std::string>()); }));
    }
  }
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.out = resolve(get_or<std::string>(j, "out", "runs"));
  c.top_k = get_or<int>(j, "top_k", 6);
  if (c.top_k < 1) bad("top_k must be >= 1");
  c.workers = get_or<int>(j, "workers", 4);
  if (c.workers < 1) bad("workers must be >= 1");
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read config '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  auto c = parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  c.source = path;
  return c;
}

Backend& BackendSet::at(const std::string& name) const {
  const auto it = by_name.find(name);
  if (it == by_name.end()) bad(fmt::format("unknown backend '{}'", name));
  return *it->second;
}

BackendSet build_backends(const Config& cfg, bool scripted_only) {
  BackendSet set;
  set.dispatcher = std::make_shared<Dispatcher>(cfg.retry);
  set.fingerprints = json::object();
  // Token check first so a misconfigured run fails before any fixture I/O.
  for (const auto& b : cfg.backends) {
    if (b.kind != "remote") continue;
    if (scripted_only) bad(fmt::format("backend '{}' is remote; --dry-run accepts scripted backends only", b.name));
    if (std::getenv(b.token_env.c_str()) == nullptr) {
      bad(fmt::format("backend '{}': token variable {} is not set", b.name, b.token_env));
    }
  }
  for (const auto& b : cfg.backends) {
    BackendId id{b.name, b.roles, b.coordinate_space};
    json roles = json::array();
    for (auto r : b.roles) roles.push_back(to_string(r));
    if (b.kind == "scripted") {
      set.by_name[b.name] = ScriptedBackend::from_file(id, b.fixture);
      set.fingerprints[b.name] = {{"kind", "scripted"},
                                  {"roles", roles},
                                  {"fixture_sha256", sha256_hex(read_file_bytes(b.fixture))}};
    } else {
      RemoteEndpoint ep{b.endpoint, b.model, std::getenv(b.token_env.c_str())};
      set.by_name[b.name] = std::make_shared<RemoteBackend>(id, ep, set.dispatcher);
      set.fingerprints[b.name] = {{"kind", "remote"},
                                  {"roles", roles},
                                  {"endpoint", b.endpoint},
                                  {"model", b.model},
                                  {"token_env", b.token_env}};
    }
    if (b.coordinate_space) set.fingerprints[b.name]["coordinate_space"] = to_string(*b.coordinate_space);
  }
  return set;
}

}  // namespace edabench
