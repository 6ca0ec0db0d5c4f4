#include "edabench/commands.hpp"

#include <fmt/format.h>
#include <ostream>

#include "edabench/config.hpp"
#include "edabench/ingestion.hpp"
#include "edabench/report.hpp"
#include "edabench/runner.hpp"
#include "edabench/synthetic.hpp"

namespace edabench {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::IoError:
    case ErrorCode::ConfigError:
    case ErrorCode::ImageError: return kExitIo;
    default: return kExitDomain;
  }
}

template <typename F>
int guarded(std::ostream& err, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: IoError: " << e.what() << "\n";
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: ParseError: " << e.what() << "\n";
    return kExitDomain;
  }
}

Config effective_config(const CliOptions& o) {
  if (!o.config) throw Error(ErrorCode::ConfigError, "--config is required");
  auto cfg = load_config(*o.config);
  if (o.out) cfg.out = *o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (!o.views.empty()) {
    cfg.views.clear();
    for (const auto& v : o.views) {
      try {
        cfg.views.push_back(parse_view(v));
      } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
      }
    }
  }
  if (!o.agents.empty()) {
    std::vector<AgentConfig> keep;
    for (const auto& name : o.agents) keep.push_back(cfg.agent(name));
    cfg.agents = std::move(keep);
  }
  return cfg;
}

fs::path out_root(const CliOptions& o) {
  if (o.out) return *o.out;
  if (o.config) return load_config(*o.config).out;
  throw Error(ErrorCode::ConfigError, "--out or --config is required");
}

std::string need_run_id(const CliOptions& o) {
  if (!o.run_id) throw Error(ErrorCode::ConfigError, "a run id is required");
  return *o.run_id;
}

}  // namespace

int cmd_validate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    fs::path manifest;
    if (o.manifest) {
      manifest = *o.manifest;
    } else if (o.config) {
      manifest = load_config(*o.config).dataset;
    } else {
      throw Error(ErrorCode::ConfigError, "give a manifest path or --config");
    }
    const auto r = validate_manifest(manifest, true);
    for (const auto& v : r.violations) {
      out << fmt::format("line {}{}: {}: {}\n", v.line, v.sample_id.empty() ? "" : " [" + v.sample_id + "]",
                         to_string(v.code), v.message);
    }
    out << fmt::format("{} records, {} valid, {} violations\n", r.valid.size() + r.violations.size(), r.valid.size(),
                       r.violations.size());
    return r.clean() ? kExitOk : kExitDomain;
  });
}

int cmd_run(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = effective_config(o);
    RunOptions ro;
    ro.dry_run = o.dry_run;
    ro.resume = o.resume;
    ro.stop_after = o.stop_after;
    ro.log = &out;
    const auto sum = run_evaluation(cfg, ro);
    out << fmt::format("run {}: {} planned, {} skipped, {} already done, {} executed, {} remaining\n", sum.run_id,
                       sum.planned, sum.skipped, sum.already_done, sum.executed, sum.remaining);
    const auto committed = sum.already_done + sum.executed;
    if (committed == 0) {
      err << "error: no item completed\n";
      return kExitDomain;
    }
    if (sum.remaining == 0) {
      const auto scores = score_run(sum.dir, cfg.top_k);
      write_report(sum.dir, o.formats);
      out << summary_table(scores);
    }
    out << "results: " << sum.dir.string() << "\n";
    return kExitOk;
  });
}

int cmd_score(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto dir = run_dir(out_root(o), need_run_id(o));
    const int top_k = o.config ? load_config(*o.config).top_k : 6;
    const auto scores = score_run(dir, top_k);
    out << summary_table(scores);
    return kExitOk;
  });
}

int cmd_report(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto dir = run_dir(out_root(o), need_run_id(o));
    for (const auto& p : write_report(dir, o.formats)) out << p.string() << "\n";
    return kExitOk;
  });
}

int cmd_audit(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto dir = run_dir(out_root(o), need_run_id(o));
    const auto a = audit_run(dir);
    for (const auto& p : a.problems) out << p << "\n";
    out << fmt::format("{} ledger keys, {} records, {}\n", a.ledger_keys, a.records,
                       a.ok() ? "consistent" : fmt::format("{} problems", a.problems.size()));
    return a.ok() ? kExitOk : kExitDomain;
  });
}

int cmd_synth(const fs::path& dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    write_synthetic_dataset(dir);
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
  });
}

}  // namespace edabench
