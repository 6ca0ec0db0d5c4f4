#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edabench/analytics.hpp"
#include "edabench/config.hpp"
#include "edabench/ingestion.hpp"
#include "edabench/scoring.hpp"
#include "json.hpp"

namespace edabench {

struct WorkItem {
  std::string sample_id;
  ViewLabel view = ViewLabel::Large;
  std::string agent;

  std::string key() const;  // "sample\tView\tagent", the ledger line
  friend bool operator==(const WorkItem&, const WorkItem&) = default;
};

struct Plan {
  std::vector<WorkItem> items;
  std::vector<std::string> skipped;  // one reason per dropped (sample, view)
};

/// Samples in shuffled_order(seed), then views, then agents, in the given order.
Plan plan_run(const Dataset& d, const std::vector<ViewLabel>& views, const std::vector<std::string>& agents,
              std::uint64_t seed);

/// Deterministic id from the config digest, seed, dataset and selection.
std::string make_run_id(const Config& cfg, const std::string& manifest_hash);

/// Executes one item; every backend failure ends up inside the record.
nlohmann::json execute_item(const Dataset& d, const WorkItem& item, const Config& cfg, const BackendSet& backends,
                            bool zero_timing);

struct RunOptions {
  bool dry_run = false;
  std::optional<std::string> resume;     // run id to continue
  std::optional<std::size_t> stop_after;  // commit at most this many items, then stop
  std::ostream* log = nullptr;
};

struct RunSummary {
  std::string run_id;
  std::filesystem::path dir;
  std::size_t planned = 0;
  std::size_t skipped = 0;
  std::size_t already_done = 0;
  std::size_t executed = 0;
  std::size_t remaining = 0;  // after this invocation
  std::size_t repaired = 0;   // lines dropped by resume repair
};

/// plan + execute. Creates <cfg.out>/<run_id>/ or continues it.
RunSummary run_evaluation(const Config& cfg, const RunOptions& opts);

/// Drops torn trailing lines, unparsable lines, records missing from the
/// ledger and duplicate records; ledger keys without a record are removed
/// so they run again. Returns the number of lines dropped.
std::size_t repair_run(const std::filesystem::path& dir);

struct AuditReport {
  std::size_t ledger_keys = 0;
  std::size_t records = 0;
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

AuditReport audit_run(const std::filesystem::path& dir);

/// Reads every persisted record of a run, in file order.
std::vector<nlohmann::json> load_records(const std::filesystem::path& dir);

/// Computes the analytics bundle from the records alone and writes
/// scores/scores.json. Throws EmptyRun when there are no records.
nlohmann::json score_run(const std::filesystem::path& dir, int top_k = 6);

/// <out>/<run_id>; throws UnknownRun when it holds no run.manifest.
std::filesystem::path run_dir(const std::filesystem::path& out, const std::string& run_id);

}  // namespace edabench
