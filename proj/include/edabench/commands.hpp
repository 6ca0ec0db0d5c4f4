#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace edabench {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> manifest;  // validate without a config
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> views;
  std::vector<std::string> agents;
  bool dry_run = false;
  std::set<std::string> formats{"md", "csv", "svg"};
  std::optional<std::string> resume;
  std::optional<std::string> run_id;
  std::optional<std::size_t> stop_after;
};

int cmd_validate(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_run(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_score(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_report(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_audit(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_synth(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace edabench
