#include <CLI11.hpp>
#include <iostream>

#include "edabench/commands.hpp"

using namespace edabench;

int main(int argc, char** argv) {
  CLI::App app{"GUI-agent benchmark harness for EDA screenshots"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edabench 1.0.0");

  CliOptions o;
  std::string config, out, manifest, synth_dir;
  std::uint64_t seed = 0;
  std::string formats;
  std::size_t stop_after = 0;

  auto add_config = [&](CLI::App* c) { c->add_option("--config", config, "Config file (JSON)"); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "Results root"); };
  auto add_run_id = [&](CLI::App* c) {
    c->add_option("run_id", o.run_id, "Run id")->required();
  };

  auto* validate = app.add_subcommand("validate", "Check a dataset manifest");
  add_config(validate);
  validate->add_option("manifest", manifest, "Manifest path (instead of --config)");

  auto add_run_flags = [&](CLI::App* c) {
    add_config(c);
    add_out(c);
    c->add_option("--seed", seed, "Override the sample-order seed");
    c->add_option("--views", o.views, "Views to evaluate (Large Middle Small)")->delimiter(',');
    c->add_option("--agents", o.agents, "Agents to evaluate")->delimiter(',');
    c->add_flag("--dry-run", o.dry_run, "Scripted backends only");
    c->add_option("--formats", formats, "Report formats, comma separated (md,csv,svg)");
    c->add_option("--stop-after", stop_after, "Commit at most N items, then stop");
  };
  auto* run = app.add_subcommand("run", "Plan, execute, score and report");
  add_run_flags(run);
  run->add_option("--resume", o.resume, "Continue this run id");

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run");
  add_run_flags(resume);
  resume->add_option("run_id", o.resume, "Run id")->required();

  auto* score = app.add_subcommand("score", "Recompute aggregates from persisted records");
  add_config(score);
  add_out(score);
  add_run_id(score);

  auto* report = app.add_subcommand("report", "Render tables and figures of a scored run");
  add_config(report);
  add_out(report);
  add_run_id(report);
  report->add_option("--formats", formats, "Report formats, comma separated (md,csv,svg)");

  auto* audit = app.add_subcommand("audit", "Check ledger and record consistency");
  add_config(audit);
  add_out(audit);
  add_run_id(audit);

  auto* synth = app.add_subcommand("synth", "Write the bundled synthetic mini-dataset");
  synth->add_option("dir", synth_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitIo;
  }

  if (!config.empty()) o.config = config;
  if (!out.empty()) o.out = out;
  if (!manifest.empty()) o.manifest = manifest;
  for (auto* c : {run, resume}) {
    if (c->parsed() && c->count("--seed") > 0) o.seed = seed;
  }
  if (stop_after > 0) o.stop_after = stop_after;
  if (!formats.empty()) {
    o.formats.clear();
    std::size_t start = 0;
    while (start <= formats.size()) {
      const auto comma = formats.find(',', start);
      const auto f = formats.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!f.empty()) o.formats.insert(f);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }

  auto& cout = std::cout;
  auto& cerr = std::cerr;
  if (validate->parsed()) return cmd_validate(o, cout, cerr);
  if (run->parsed() || resume->parsed()) return cmd_run(o, cout, cerr);
  if (score->parsed()) return cmd_score(o, cout, cerr);
  if (report->parsed()) return cmd_report(o, cout, cerr);
  if (audit->parsed()) return cmd_audit(o, cout, cerr);
  if (synth->parsed()) return cmd_synth(synth_dir, cout, cerr);
  return kExitIo;
}
