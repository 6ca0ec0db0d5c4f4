#include <set>
#include <sstream>

#include "doctest.h"
#include "edabench/runner.hpp"
#include "helpers.hpp"

using namespace edabench;
using nlohmann::json;
using testing::TempDir;

namespace {

Config mini_config(const std::filesystem::path& out) {
  auto c = load_config(testing::mini_dir() / "dryrun.json");
  c.out = out;
  return c;
}

RunOptions dry(std::optional<std::size_t> stop = std::nullopt, std::optional<std::string> resume = std::nullopt) {
  RunOptions o;
  o.dry_run = true;
  o.stop_after = stop;
  o.resume = std::move(resume);
  return o;
}

const json* find_record(const std::vector<json>& rs, const std::string& id, const std::string& view,
                        const std::string& agent) {
  for (const auto& r : rs) {
    if (r["key"]["sample_id"] == id && r["key"]["view"] == view && r["key"]["agent"] == agent) return &r;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("plan covers samples by views by agents and skips missing views") {
  const auto d = load_manifest(testing::mini_dir() / "manifest.jsonl");
  const auto p = plan_run(d, {ViewLabel::Large, ViewLabel::Small}, {"a", "b"}, 3);
  CHECK(p.items.size() == (10 * 2 - 1) * 2);
  REQUIRE(p.skipped.size() == 1);
  CHECK(p.skipped[0].rfind("s06/Small: MissingView", 0) == 0);
  CHECK(p.items[0].view == ViewLabel::Large);
  CHECK(p.items[0].agent == "a");
  CHECK(p.items[1].agent == "b");
  CHECK(plan_run(d, {ViewLabel::Large}, {"a"}, 3).items == plan_run(d, {ViewLabel::Large}, {"a"}, 3).items);
  CHECK(WorkItem{"s01", ViewLabel::Middle, "edagent"}.key() == "s01\tMiddle\tedagent");
}

TEST_CASE("run id depends on seed and selection") {
  const auto c = mini_config("/tmp");
  auto c2 = c;
  c2.seed = 7;
  auto c3 = c;
  c3.views = {ViewLabel::Large};
  const auto id = make_run_id(c, "h");
  CHECK(id.size() == 16);
  CHECK(id.rfind("run-", 0) == 0);
  CHECK(id == make_run_id(c, "h"));
  CHECK(id != make_run_id(c2, "h"));
  CHECK(id != make_run_id(c3, "h"));
  CHECK(id != make_run_id(c, "h2"));
}

TEST_CASE("records carry trace, score and click") {
  TempDir t;
  const auto c = mini_config(t.path());
  const auto d = load_manifest(c.dataset);
  const auto b = build_backends(c, true);
  const auto r = execute_item(d, {"s01", ViewLabel::Large, "edagent"}, c, b, true);
  CHECK(r["agent_kind"] == "edagent");
  CHECK(r["timing_ms"] == 0.0);
  CHECK(r["trace"].contains("s0"));
  CHECK(r["score"]["action"].is_number_integer());
  CHECK(r["view_size"] == json::array({640, 360}));
  CHECK(r["features"].contains("luminance"));

  const auto u = execute_item(d, {"s01", ViewLabel::Large, "uitars"}, c, b, true);
  CHECK(u["score"]["answer"].is_null());
  CHECK(u["score"]["answer_error"].get<std::string>().rfind("AnswerScoreUnavailable", 0) == 0);
}

TEST_CASE("aguvis refusal becomes a router failure record") {
  TempDir t;
  const auto c = mini_config(t.path());
  const auto d = load_manifest(c.dataset);
  const auto b = build_backends(c, true);
  const auto r = execute_item(d, {"s03", ViewLabel::Large, "aguvis"}, c, b, true);
  CHECK(r["trace"]["failed"] == true);
  CHECK(r["click"].is_null());
  CHECK(r["score"]["action"] == 0);
  CHECK(r["score"]["action_h"] == 0);
  CHECK(r["score"]["action_v"] == 0);
  const auto errs = r["errors"].dump();
  CHECK(errs.find("GroundingParseError") != std::string::npos);
  CHECK(errs.find("RouterFailure") != std::string::npos);
}

TEST_CASE("dry runs are byte-identical") {
  TempDir a, b;
  const auto sa = run_evaluation(mini_config(a.path()), dry());
  const auto sb = run_evaluation(mini_config(b.path()), dry());
  CHECK(sa.run_id == sb.run_id);
  CHECK(sa.planned == 116);
  CHECK(sa.skipped == 1);
  CHECK(sa.executed == 116);
  CHECK(sa.remaining == 0);
  score_run(sa.dir);
  score_run(sb.dir);
  CHECK(testing::tree_bytes(sa.dir) == testing::tree_bytes(sb.dir));
  const auto m = json::parse(testing::slurp(sa.dir / "run.manifest"));
  CHECK(m["created_at"] == "1970-01-01T00:00:00Z");
  CHECK(m["dry_run"] == true);
  CHECK(audit_run(sa.dir).ok());
  CHECK(load_records(sa.dir).size() == 116);
}

TEST_CASE("killed run resumes to the same bytes") {
  TempDir straight, killed;
  const auto full = run_evaluation(mini_config(straight.path()), dry());

  const auto cfg = mini_config(killed.path());
  const auto part = run_evaluation(cfg, dry(30));
  CHECK(part.executed == 30);
  CHECK(part.remaining == 86);

  // Simulate a crash in the middle of a record write.
  {
    std::ofstream torn(part.dir / "records" / "edagent.jsonl", std::ios::app | std::ios::binary);
    torn << "{\"key\": {\"sample_id\": \"s0";
  }
  const auto audit = audit_run(part.dir);
  CHECK_FALSE(audit.ok());

  std::ostringstream log;
  auto opts = dry(std::nullopt, part.run_id);
  opts.log = &log;
  const auto rest = run_evaluation(cfg, opts);
  CHECK(rest.repaired == 1);
  CHECK(rest.already_done == 30);
  CHECK(rest.executed == 86);
  CHECK(log.str().find("86 items remaining") != std::string::npos);
  CHECK(testing::tree_bytes(rest.dir) == testing::tree_bytes(full.dir));

  std::ostringstream again;
  auto o2 = dry(std::nullopt, part.run_id);
  o2.log = &again;
  CHECK(run_evaluation(cfg, o2).executed == 0);
  CHECK(again.str().find("0 items remaining") != std::string::npos);
}

TEST_CASE("repair drops records missing from the ledger and reruns them") {
  TempDir t;
  const auto cfg = mini_config(t.path());
  const auto s = run_evaluation(cfg, dry(5));
  // Record written, ledger entry lost.
  auto ledger = testing::slurp(s.dir / "ledger");
  ledger = ledger.substr(0, ledger.rfind('\n', ledger.size() - 2) + 1);
  testing::spit(s.dir / "ledger", ledger);
  CHECK_FALSE(audit_run(s.dir).ok());
  CHECK(repair_run(s.dir) == 1);
  CHECK(audit_run(s.dir).ok());
  CHECK(audit_run(s.dir).records == 4);
}

TEST_CASE("resume refuses unknown runs and changed configs") {
  TempDir t;
  auto cfg = mini_config(t.path());
  try {
    run_evaluation(cfg, dry(std::nullopt, "run-000000000000"));
    FAIL("expected UnknownRun");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownRun);
  }
  const auto s = run_evaluation(cfg, dry(3));
  cfg.seed = 99;
  try {
    run_evaluation(cfg, dry(std::nullopt, s.run_id));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("scores bundle holds every analytics section") {
  TempDir t;
  const auto s = run_evaluation(mini_config(t.path()), dry());
  const auto j = score_run(s.dir);
  CHECK(std::filesystem::exists(s.dir / "scores" / "scores.json"));
  for (const char* k : {"aggregates", "ori_dyn", "correlation_matrices", "answer_action", "gains", "phases",
                        "heatmaps", "features", "answer_distribution", "notes"}) {
    CHECK_MESSAGE(j.contains(k), k);
  }
  CHECK(j["heatmaps"]["jsd"]["base"] == 2);
  CHECK(j["heatmaps"]["grids"].size() == 8);
  CHECK(j["gains"]["top_k"] == 6);
  bool dyn_note = false;
  for (const auto& n : j["notes"]) dyn_note = dyn_note || n.get<std::string>().find("Dyn") != std::string::npos;
  CHECK(dyn_note);

  // Edagent mean action equals the mean over its records.
  const auto recs = load_records(s.dir);
  double hits = 0, n = 0;
  for (const auto& r : recs) {
    if (r["key"]["agent"] != "edagent") continue;
    hits += r["score"]["action"].get<int>();
    n += 1;
  }
  for (const auto& row : j["aggregates"]["agent"]) {
    if (row["label"] == "edagent") CHECK(row["action"].get<double>() == doctest::Approx(hits / n));
  }
  CHECK(score_run(s.dir) == j);
}

TEST_CASE("tie and wrong validator decisions follow the rules") {
  TempDir t;
  const auto s = run_evaluation(mini_config(t.path()), dry());
  const auto recs = load_records(s.dir);
  const auto* tie = find_record(recs, "s05", "Middle", "edagent");
  REQUIRE(tie != nullptr);
  CHECK((*tie)["trace"]["s0"] == (*tie)["trace"]["s1"]);
  CHECK((*tie)["trace"]["chosen"] == "G");
  const auto* wrong = find_record(recs, "s08", "Large", "edagent");
  REQUIRE(wrong != nullptr);
  CHECK((*wrong)["trace"]["chosen"].is_string());
}

TEST_CASE("scoring an empty run is an error") {
  TempDir t;
  std::filesystem::create_directories(t / "records");
  testing::spit(t / "run.manifest", "{}");
  try {
    score_run(t.path());
    FAIL("expected EmptyRun");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyRun);
  }
  CHECK_THROWS_AS(run_dir(t.path(), "run-nope"), Error);
}

TEST_CASE("tokens never reach the run directory") {
  TempDir t;
  ::setenv("EDABENCH_TOKEN_MLLM", "sekrit-value-42", 1);
  const auto s = run_evaluation(mini_config(t.path()), dry());
  for (const auto& [name, bytes] : testing::tree_bytes(s.dir)) CHECK(bytes.find("sekrit-value-42") == std::string::npos);
  ::unsetenv("EDABENCH_TOKEN_MLLM");
}
