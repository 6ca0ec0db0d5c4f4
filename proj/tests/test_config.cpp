#include <cstdlib>

#include "doctest.h"
#include "edabench/config.hpp"
#include "helpers.hpp"

using namespace edabench;
using nlohmann::json;

namespace {

json base_config() {
  return json::parse(testing::slurp(testing::mini_dir() / "dryrun.json"));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ContractViolation;
}

}  // namespace

TEST_CASE("bundled dry-run config parses") {
  const auto c = load_config(testing::mini_dir() / "dryrun.json");
  CHECK(c.dataset == testing::mini_dir() / "manifest.jsonl");
  CHECK(c.agents.size() == 4);
  CHECK(c.agent("edagent").kind == "edagent");
  CHECK(c.agent("uitars").answerer.empty());
  CHECK(c.backend("uitars-sim").coordinate_space == CoordinateSpace::AbsolutePixels);
  CHECK(c.judge_runs == 5);
  CHECK(c.seed == 2025);
  CHECK(c.all_scripted());
  CHECK(c.digest.size() == 64);
  CHECK(c.router.selection.kind == SelectionMode::Kind::Comparative);
  CHECK(code_of([&] { c.agent("nobody"); }) == ErrorCode::ConfigError);
}

TEST_CASE("environment interpolation") {
  ::setenv("EDABENCH_TEST_HOST", "10.0.0.7", 1);
  CHECK(interpolate_env("http://${EDABENCH_TEST_HOST}:8000/v1") == "http://10.0.0.7:8000/v1");
  CHECK(interpolate_env("no vars") == "no vars");
  ::unsetenv("EDABENCH_TEST_UNSET");
  CHECK(code_of([] { interpolate_env("${EDABENCH_TEST_UNSET}"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { interpolate_env("${OPEN"); }) == ErrorCode::ConfigError);
}

TEST_CASE("config digest is over the raw text") {
  ::setenv("EDABENCH_TEST_MODEL", "m-1", 1);
  auto j = base_config();
  j["backends"].push_back({{"name", "qwen"},
                           {"kind", "remote"},
                           {"roles", {"comprehend"}},
                           {"endpoint", "http://localhost:9/v1/chat/completions"},
                           {"model", "${EDABENCH_TEST_MODEL}"}});
  const auto text = j.dump();
  const auto a = parse_config(text, testing::mini_dir());
  ::setenv("EDABENCH_TEST_MODEL", "m-2", 1);
  const auto b = parse_config(text, testing::mini_dir());
  CHECK(a.digest == b.digest);
  CHECK(a.backend("qwen").model == "m-1");
  CHECK(b.backend("qwen").model == "m-2");
  CHECK(a.backend("qwen").token_env == "EDABENCH_TOKEN_QWEN");
  CHECK_FALSE(a.all_scripted());
}

TEST_CASE("malformed configs are config errors") {
  CHECK(code_of([] { parse_config("{not json"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config("[]"); }) == ErrorCode::ConfigError);

  auto no_space = base_config();
  no_space["backends"][1].erase("coordinate_space");
  CHECK(code_of([&] { parse_config(no_space.dump(), testing::mini_dir()); }) == ErrorCode::ConfigError);

  auto bad_role = base_config();
  bad_role["agents"][0]["validator"] = "judge";
  CHECK(code_of([&] { parse_config(bad_role.dump(), testing::mini_dir()); }) == ErrorCode::ConfigError);

  auto unknown = base_config();
  unknown["agents"][0]["grounder"] = "ghost";
  CHECK(code_of([&] { parse_config(unknown.dump(), testing::mini_dir()); }) == ErrorCode::ConfigError);

  auto tau = base_config();
  tau["router"]["selection"] = "threshold";
  CHECK(code_of([&] { parse_config(tau.dump(), testing::mini_dir()); }) == ErrorCode::ConfigError);
  tau["router"]["tau"] = 0.6;
  CHECK(parse_config(tau.dump(), testing::mini_dir()).router.selection.tau == 0.6);

  auto retry = base_config();
  retry["retry"]["max_attempts"] = 0;
  CHECK(code_of([&] { parse_config(retry.dump(), testing::mini_dir()); }) == ErrorCode::ConfigError);

  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == ErrorCode::IoError);
}

TEST_CASE("backend construction checks tokens before anything else") {
  auto j = base_config();
  j["backends"].push_back({{"name", "remote-x"},
                           {"kind", "remote"},
                           {"roles", {"comprehend"}},
                           {"endpoint", "http://127.0.0.1:9/v1/chat/completions"}});
  const auto c = parse_config(j.dump(), testing::mini_dir());
  ::unsetenv("EDABENCH_TOKEN_REMOTE_X");
  CHECK(code_of([&] { build_backends(c, false); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { build_backends(c, true); }) == ErrorCode::ConfigError);

  ::setenv("EDABENCH_TOKEN_REMOTE_X", "tok-secret-123", 1);
  const auto set = build_backends(c, false);
  CHECK(set.by_name.size() == 5);
  CHECK(set.fingerprints["remote-x"]["token_env"] == "EDABENCH_TOKEN_REMOTE_X");
  CHECK(set.fingerprints.dump().find("tok-secret-123") == std::string::npos);
  CHECK(dynamic_cast<RemoteBackend&>(set.at("remote-x")).endpoint().token == "tok-secret-123");
  ::unsetenv("EDABENCH_TOKEN_REMOTE_X");
}

TEST_CASE("scripted backends fingerprint their fixtures") {
  const auto c = load_config(testing::mini_dir() / "dryrun.json");
  const auto set = build_backends(c, true);
  CHECK(set.fingerprints["mllm"]["fixture_sha256"].get<std::string>().size() == 64);
  CHECK(set.fingerprints["uitars-sim"]["coordinate_space"] == "absolute_pixels");
  CHECK(set.at("judge").id().has(Role::Judge));
  CHECK(code_of([&] { set.at("ghost"); }) == ErrorCode::ConfigError);
}

TEST_CASE("missing fixture file is an io error") {
  auto j = base_config();
  j["backends"][0]["fixture"] = "scripted/nope.json";
  const auto c = parse_config(j.dump(), testing::mini_dir());
  CHECK(code_of([&] { build_backends(c, true); }) == ErrorCode::IoError);
}
