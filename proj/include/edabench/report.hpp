#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace edabench {

/// Fixed-point text rounded half away from zero at `digits` decimals. The
/// rounding works on the shortest decimal form of x, so 0.125 -> "0.13" and
/// 2.675 -> "2.68". Negative zero prints without a sign.
std::string format_fixed(double x, int digits);

/// Percent text without the sign: two decimals below 100, one from 100 up.
std::string format_pct(double pct);

/// "+0.13, 32.51%" style gain cell; "n/a" replaces an undefined percentage.
std::string gain_cell(double abs_gain, std::optional<double> pct_gain);

/// Perceptually uniform (viridis) colour for t in [0,1], as "#rrggbb".
std::string colormap_hex(double t);

inline const std::set<std::string> kAllFormats{"md", "csv", "svg"};

/// Renders scores/scores.json of a run into <dir>/report/. Returns the files
/// written, sorted. Throws UnknownRun when the run was never scored.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& run_dir,
                                                const std::set<std::string>& formats = kAllFormats);

/// One line per agent: records, mean answer, mean action.
std::string summary_table(const nlohmann::json& scores);

}  // namespace edabench
