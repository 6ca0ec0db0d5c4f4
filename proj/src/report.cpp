#include "edabench/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "edabench/error.hpp"

namespace edabench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_fixed(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (digits < 0) throw Error(ErrorCode::ContractViolation, "negative digit count");
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof buf, std::abs(x), std::chars_format::fixed);
  std::string s(buf, res.ptr);
  const bool neg = std::signbit(x);

  auto dot = s.find('.');
  std::string ip = dot == std::string::npos ? s : s.substr(0, dot);
  std::string fp = dot == std::string::npos ? "" : s.substr(dot + 1);
  bool up = false;
  if (static_cast<int>(fp.size()) > digits) {
    up = fp[static_cast<std::size_t>(digits)] >= '5';
    fp.resize(static_cast<std::size_t>(digits));
  } else {
    fp.append(static_cast<std::size_t>(digits) - fp.size(), '0');
  }
  std::string digits_all = ip + fp;
  if (up) {
    int i = static_cast<int>(digits_all.size()) - 1;
    for (; i >= 0; --i) {
      if (digits_all[static_cast<std::size_t>(i)] == '9') {
        digits_all[static_cast<std::size_t>(i)] = '0';
      } else {
        ++digits_all[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) digits_all.insert(digits_all.begin(), '1');
  }
  const auto split = digits_all.size() - fp.size();
  std::string out = digits_all.substr(0, split);
  if (digits > 0) out += "." + digits_all.substr(split);
  const bool zero = std::all_of(digits_all.begin(), digits_all.end(), [](char c) { return c == '0'; });
  return neg && !zero ? "-" + out : out;
}

std::string format_pct(double pct) { return format_fixed(pct, std::abs(pct) < 100.0 ? 2 : 1) + "%"; }

std::string gain_cell(double abs_gain, std::optional<double> pct_gain) {
  auto a = format_fixed(abs_gain, 2);
  if (a.front() != '-') a = "+" + a;
  return fmt::format("{}, {}", a, pct_gain ? format_pct(*pct_gain) : "n/a");
}

std::string colormap_hex(double t) {
  static constexpr std::array<std::array<int, 3>, 9> kViridis{{{68, 1, 84},
                                                                {72, 40, 120},
                                                                {62, 73, 137},
                                                                {49, 104, 142},
                                                                {38, 130, 142},
                                                                {31, 158, 137},
                                                                {53, 183, 121},
                                                                {110, 206, 88},
                                                                {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * (kViridis.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kViridis.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<int>(std::lround(kViridis[i][k] + f * (kViridis[i + 1][k] - kViridis[i][k])));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
}

namespace {

std::string num(const json& v, int digits = 4) { return v.is_number() ? format_fixed(v.get<double>(), digits) : "-"; }

std::string corr_cell(const json& c) {
  if (!c.is_object()) return "-";
  return fmt::format("{}/{}", num(c.at("srcc")), num(c.at("plcc")));
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_md(const Table& t) {
  std::string s = "| " + fmt::format("{}", fmt::join(t.header, " | ")) + " |\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) s += i == 0 ? " --- |" : " ---: |";
  s += "\n";
  for (const auto& r : t.rows) s += "| " + fmt::format("{}", fmt::join(r, " | ")) + " |\n";
  return s;
}

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\n") == std::string::npos) return f;
  std::string q = "\"";
  for (char c : f) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string to_csv(const Table& t) {
  auto line = [](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + csv_field(r[i]);
    return s + "\n";
  };
  std::string s = line(t.header);
  for (const auto& r : t.rows) s += line(r);
  return s;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", p.string()));
  out << text;
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

Table agents_table(const json& s) {
  Table t{{"Agent", "Records", "Answered", "Answer", "Precision", "Recall", "Action", "Action_h", "Action_v"}, {}};
  for (const auto& r : s["aggregates"]["agent"]) {
    t.rows.push_back({r["label"].get<std::string>(), std::to_string(r["n"].get<int>()),
                      std::to_string(r["n_answer"].get<int>()), num(r["answer"]), num(r["precision"]), num(r["recall"]),
                      num(r["action"]), num(r["action_h"]), num(r["action_v"])});
  }
  return t;
}

Table ori_dyn_table(const json& s, const char* metric) {
  std::vector<std::string> combos;
  for (const auto& r : s["ori_dyn"]) {
    const auto c = r["combo"].get<std::string>();
    if (std::find(combos.begin(), combos.end(), c) == combos.end()) combos.push_back(c);
  }
  Table t{{"Agent"}, {}};
  for (const auto& c : combos) {
    t.header.push_back(c + " Ori.");
    t.header.push_back(c + " Dyn.");
  }
  for (const auto& a : s["agents"]) {
    std::vector<std::string> row{a.get<std::string>()};
    for (const auto& c : combos) {
      for (const auto& r : s["ori_dyn"]) {
        if (r["agent"] != a || r["combo"] != c) continue;
        row.push_back(num(r["ori"][metric]));
        row.push_back(num(r["dyn"][metric]));
      }
    }
    t.rows.push_back(row);
  }
  return t;
}

Table agreement_table(const json& rows, const std::vector<std::string>& cols) {
  Table t{{"Combo"}, {}};
  for (const auto& c : cols) t.header.push_back(c + " SRCC/PLCC");
  for (const auto& r : rows) {
    std::vector<std::string> row{r["combo"].get<std::string>()};
    for (const auto& c : cols) row.push_back(corr_cell(r[c]));
    t.rows.push_back(row);
  }
  return t;
}

Table gain_table_text(const json& rows, const std::vector<std::string>& levels) {
  Table t{{"Combo"}, {}};
  for (const auto& l : levels) t.header.push_back(l);
  for (const auto& r : rows) {
    std::vector<std::string> row{r["combo"].get<std::string>()};
    if (!r["missing"].empty()) {
      for (const auto& l : levels) {
        const bool miss = std::find(r["missing"].begin(), r["missing"].end(), json(l)) != r["missing"].end();
        row.push_back(miss ? "missing" : "-");
      }
    } else {
      for (const auto& g : r["levels"]) {
        auto cell = format_fixed(g["mean"].get<double>(), 4);
        if (g["abs_gain"].is_number()) {
          const auto pct = g["pct_gain"].is_number() ? std::optional<double>(g["pct_gain"].get<double>()) : std::nullopt;
          cell += " (" + gain_cell(g["abs_gain"].get<double>(), pct) + ")";
        }
        row.push_back(cell);
      }
    }
    t.rows.push_back(row);
  }
  return t;
}

Table phase_counts(const json& s) {
  Table t{{"Combo", "N", "Mean answer", "Mean action", "P1", "P2", "P3", "P4"}, {}};
  for (const auto& r : s["phases"]) {
    t.rows.push_back({r["combo"].get<std::string>(), std::to_string(r["n"].get<int>()),
                      r.contains("mean_answer") ? num(r["mean_answer"]) : "-",
                      r.contains("mean_action") ? num(r["mean_action"]) : "-",
                      std::to_string(r["counts"]["P1"].get<int>()), std::to_string(r["counts"]["P2"].get<int>()),
                      std::to_string(r["counts"]["P3"].get<int>()), std::to_string(r["counts"]["P4"].get<int>())});
  }
  return t;
}

Table phase_points(const json& s) {
  Table t{{"Combo", "Sample", "View", "Agent", "Answer", "Action", "Phase"}, {}};
  for (const auto& r : s["phases"]) {
    if (r["combo"] == "All") continue;
    for (const auto& p : r["points"]) {
      t.rows.push_back({r["combo"].get<std::string>(), p["sample_id"].get<std::string>(), p["view"].get<std::string>(),
                        p["agent"].get<std::string>(), num(p["answer"]), std::to_string(p["action"].get<int>()),
                        p["phase"].get<std::string>()});
    }
  }
  return t;
}

Table square_table(const json& labels, const json& m, const std::string& corner) {
  Table t{{corner}, {}};
  for (const auto& l : labels) t.header.push_back(l.get<std::string>());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<std::string> row{labels[i].get<std::string>()};
    for (const auto& v : m[i]) row.push_back(num(v));
    t.rows.push_back(row);
  }
  return t;
}

Table features_table(const json& s) {
  Table t{{"Combo", "View", "Images", "Luminance", "Contrast", "Chrominance", "Blur", "SI"}, {}};
  for (const auto& r : s["features"]) {
    const auto& f = r["features"];
    t.rows.push_back({r["combo"].get<std::string>(), r["view"].get<std::string>(),
                      std::to_string(r["images"].get<int>()), num(f["luminance"], 2), num(f["contrast"], 2),
                      num(f["chrominance"], 2), num(f["blur"], 2), num(f["spatial_information"], 2)});
  }
  return t;
}

Table aggregate_table(const json& rows) {
  Table t{{"Group", "N", "Answered", "Answer", "Action", "Action_h", "Action_v"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r["label"].get<std::string>(), std::to_string(r["n"].get<int>()),
                      std::to_string(r["n_answer"].get<int>()), num(r["answer"]), num(r["action"]),
                      num(r["action_h"]), num(r["action_v"])});
  }
  return t;
}

std::string heatmap_svg(const json& g) {
  const int gx = g["gx"].get<int>(), gy = g["gy"].get<int>();
  const int cell = 10, top = 28;
  double peak = 0.0;
  for (const auto& row : g["bins"])
    for (const auto& v : row) peak = std::max(peak, v.get<double>());
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
      gx * cell, gy * cell + top, gx * cell, gy * cell + top);
  s += fmt::format("<text x=\"4\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">{} correct clicks (n={})</text>\n",
                   xml_escape(g["combo"].get<std::string>()), g["points"].get<int>());
  for (int y = 0; y < gy; ++y) {
    for (int x = 0; x < gx; ++x) {
      const double v = g["bins"][y][x].get<double>();
      s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", x * cell,
                       top + y * cell, cell, cell, colormap_hex(peak > 0 ? v / peak : 0.0));
    }
  }
  return s + "</svg>\n";
}

std::string matrix_svg(const std::string& title, const json& labels, const json& m) {
  const int n = static_cast<int>(labels.size());
  const int cell = 56, left = 110, top = 40;
  const int w = left + n * cell + 10, h = top + n * cell + 10;
  std::string s = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                              w, h, w, h);
  s += fmt::format("<text x=\"4\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">{}</text>\n", xml_escape(title));
  for (int i = 0; i < n; ++i) {
    const auto l = xml_escape(labels[i].get<std::string>());
    s += fmt::format("<text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                     top + i * cell + cell / 2 + 4, l);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">{}</text>\n",
                     left + i * cell + cell / 2, top - 4, l);
    for (int j = 0; j < n; ++j) {
      const auto& v = m[i][j];
      const bool ok = v.is_number();
      const double val = ok ? v.get<double>() : 0.0;
      s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\"/>\n",
                       left + j * cell, top + i * cell, cell, cell, ok ? colormap_hex((val + 1.0) / 2.0) : "#d0d0d0");
      s += fmt::format(
          "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
          left + j * cell + cell / 2, top + i * cell + cell / 2 + 4, ok && val > 0.3 ? "#000000" : "#ffffff",
          ok ? format_fixed(val, 2) : "-");
    }
  }
  return s + "</svg>\n";
}

std::string slug(std::string s) {
  for (auto& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  return s;
}

}  // namespace

std::string summary_table(const json& scores) { return to_md(agents_table(scores)); }

std::vector<fs::path> write_report(const fs::path& run_dir, const std::set<std::string>& formats) {
  for (const auto& f : formats) {
    if (!kAllFormats.count(f)) throw Error(ErrorCode::ConfigError, fmt::format("unknown report format '{}'", f));
  }
  const auto scores_path = run_dir / "scores" / "scores.json";
  std::ifstream in(scores_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnknownRun, fmt::format("run '{}' has not been scored", run_dir.filename().string()));
  std::stringstream ss;
  ss << in.rdbuf();
  const auto s = json::parse(ss.str());

  const auto out = run_dir / "report";
  fs::create_directories(out);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file(out / name, text);
    written.push_back(out / name);
  };

  const std::vector<std::string> views{"Large", "Middle", "Small", "All"};
  const std::vector<std::string> diffs{"Easy", "Normal", "Hard", "All"};
  const auto& ar = s["answer_action"];
  const std::vector<std::pair<std::string, Table>> tables{
      {"agents", agents_table(s)},
      {"ori_dyn_action", ori_dyn_table(s, "action")},
      {"ori_dyn_answer", ori_dyn_table(s, "answer")},
      {"answer_action_resolution", agreement_table(ar["by_resolution"], views)},
      {"answer_action_difficulty", agreement_table(ar["by_difficulty"], diffs)},
      {"gains_resolution", gain_table_text(s["gains"]["resolution"], {"Large", "Middle", "Small"})},
      {"gains_difficulty", gain_table_text(s["gains"]["difficulty"], {"Hard", "Normal", "Easy"})},
      {"phases", phase_counts(s)},
      {"phase_points", phase_points(s)},
      {"jsd", square_table(s["heatmaps"]["jsd"]["labels"], s["heatmaps"]["jsd"]["matrix"], "JSD (base 2)")},
      {"correlation_answer", square_table(s["correlation_matrices"]["answer"]["labels"],
                                          s["correlation_matrices"]["answer"]["mean"], "Answer")},
      {"correlation_action", square_table(s["correlation_matrices"]["action"]["labels"],
                                          s["correlation_matrices"]["action"]["mean"], "Action")},
      {"features", features_table(s)},
      {"combo_resolution", aggregate_table(s["aggregates"]["combo_resolution"])},
      {"combo_resolution_agent", aggregate_table(s["aggregates"]["combo_resolution_agent"])},
  };

  if (formats.count("csv")) {
    for (const auto& [name, t] : tables) emit(name + ".csv", to_csv(t));
  }

  if (formats.count("md")) {
    const std::map<std::string, std::string> titles{
        {"agents", "Agents"},
        {"ori_dyn_action", "Action score, Ori. (Large) vs Dyn. (Middle and Small pooled)"},
        {"ori_dyn_answer", "Answer score, Ori. (Large) vs Dyn. (Middle and Small pooled)"},
        {"answer_action_resolution", "Answer-Action agreement by resolution"},
        {"answer_action_difficulty", "Answer-Action agreement by difficulty"},
        {"gains_resolution", "Action gains, Large -> Middle -> Small (top-k agents)"},
        {"gains_difficulty", "Action gains, Hard -> Normal -> Easy (top-k agents)"},
        {"phases", "Phase counts"},
        {"jsd", "Click-density JSD between combos"},
        {"correlation_answer", "Cross-subset consistency, Answer (mean of SRCC and PLCC)"},
        {"correlation_action", "Cross-subset consistency, Action (mean of SRCC and PLCC)"},
        {"features", "Low-level image features"},
        {"combo_resolution", "Scores by combo and resolution"},
    };
    std::string md = fmt::format("# Run {}\n\n{} records.\n", s["run_id"].get<std::string>(), s["records"].get<int>());
    for (const auto& [name, t] : tables) {
      const auto it = titles.find(name);
      if (it == titles.end()) continue;
      md += "\n## " + it->second + "\n\n" + to_md(t);
    }
    md += "\n## Notes\n\n";
    for (const auto& n : s["notes"]) md += "- " + n.get<std::string>() + "\n";
    emit("report.md", md);
  }

  if (formats.count("svg")) {
    for (const auto& g : s["heatmaps"]["grids"]) emit("heatmap_" + slug(g["combo"].get<std::string>()) + ".svg", heatmap_svg(g));
    for (const auto* metric : {"answer", "action"}) {
      const auto& m = s["correlation_matrices"][metric];
      emit(fmt::format("correlation_{}.svg", metric),
           matrix_svg(fmt::format("{} consistency across combos", metric), m["labels"], m["mean"]));
    }
  }
  std::sort(written.begin(), written.end());
  return written;
}

}  // namespace edabench
