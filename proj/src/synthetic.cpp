#include "edabench/synthetic.hpp"

#include <algorithm>
#include <array>
#include <fmt/format.h>
#include <fstream>
#include <random>

namespace edabench {

using nlohmann::json;

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 360;

// Fixed layout of every mock screen.
constexpr int kTitleBottom = 11;
constexpr int kRibbonTop = 12;
constexpr int kRibbonBottom = 51;
constexpr int kButtonTop = 17;
constexpr int kButtonSize = 28;
constexpr int kButtonPitch = 35;
constexpr int kPanelRight = 119;
constexpr int kTreeTop = 58;
constexpr int kTreePitch = 18;
constexpr int kTreeHeight = 14;

struct Palette {
  Rgb ribbon, button, accent;
};

Palette palette(SoftwareTag s) {
  switch (s) {
    case SoftwareTag::COMSOL: return {{214, 226, 240}, {160, 190, 225}, {30, 90, 170}};
    case SoftwareTag::Flotherm: return {{240, 228, 210}, {230, 180, 120}, {190, 100, 20}};
    case SoftwareTag::ICEPAK: return {{216, 236, 214}, {150, 205, 150}, {40, 130, 50}};
    case SoftwareTag::CST: return {{238, 218, 218}, {215, 150, 150}, {170, 40, 40}};
    case SoftwareTag::HFSS: return {{228, 220, 240}, {180, 160, 220}, {100, 60, 170}};
  }
  return {};
}

Rgb shade(Rgb c, int delta) {
  auto f = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + delta, 0, 255)); };
  return {f(c.r), f(c.g), f(c.b)};
}

BBox button_box(int i) {
  const int x0 = 6 + i * kButtonPitch;
  return BBox(x0, kButtonTop, x0 + kButtonSize - 1, kButtonTop + kButtonSize - 1);
}

BBox tree_box(int j) {
  const int indent = 8 + (j % 3) * 8;
  const int y0 = kTreeTop + j * kTreePitch;
  return BBox(indent, y0, kPanelRight - 8, y0 + kTreeHeight - 1);
}

struct Spec {
  const char* id;
  SoftwareTag software;
  FieldTag field;
  DifficultyTag difficulty;
  bool tree;  // target is a model-tree row rather than a ribbon button
  int slot;
  bool small_view;
  const char* question;
  const char* gt_answer;
  const char* mllm_answer;
  const char* aguvis_answer;
};

const std::array<Spec, 10> kSpecs{{
    {"s01", SoftwareTag::COMSOL, FieldTag::Acoustic, DifficultyTag::Easy, false, 3, true,
     "Set the sound pressure level limit on the transducer outlet boundary.",
     "Click Boundary Load to set outlet pressure condition",
     "Click Boundary Load to set outlet pressure condition", "Click the boundary button"},
    {"s02", SoftwareTag::COMSOL, FieldTag::Optical, DifficultyTag::Normal, false, 7, true,
     "Define the refractive index of the waveguide core material.",
     "Open Materials and edit core refractive index", "Open Materials and edit core refractive index",
     "Open Materials and edit core refractive index"},
    {"s03", SoftwareTag::COMSOL, FieldTag::Mechanical, DifficultyTag::Hard, true, 4, true,
     "Inspect the von Mises stress result of the bracket study.", "Expand Results and select Stress node",
     "Expand Results node and choose Stress plot", "Click Compute"},
    {"s04", SoftwareTag::COMSOL, FieldTag::Thermal, DifficultyTag::Normal, false, 11, true,
     "Add a heat flux condition to the heat-sink base.", "Click Heat Flux to add base boundary condition",
     "Click Heat Source to add power", "Click Heat Flux to add base boundary condition"},
    {"s05", SoftwareTag::Flotherm, FieldTag::Thermal, DifficultyTag::Hard, false, 5, true,
     "Run the solver to check the heat-sink temperature stays below 45 C.",
     "Click Solve to start the thermal simulation", "Click Solve to start the thermal simulation",
     "Open the project menu"},
    {"s06", SoftwareTag::ICEPAK, FieldTag::Thermal, DifficultyTag::Hard, true, 9, false,
     "Adjust the fan curve of the cabinet cooling fan.", "Select Fan object in model tree to edit",
     "Open Fan settings in cabinet tree", "Select Fan object in model tree to edit"},
    {"s07", SoftwareTag::CST, FieldTag::Magnetical, DifficultyTag::Easy, false, 2, true,
     "Open the field monitor for the coil magnetic flux density.",
     "Click Field Monitor to add flux density probe", "Click Field Monitor to add flux density probe",
     "Click Field Monitor"},
    {"s08", SoftwareTag::HFSS, FieldTag::Magnetical, DifficultyTag::Normal, false, 14, true,
     "Assign a radiation boundary around the antenna model.", "Click Radiation boundary and assign to airbox",
     "Assign Perfect E boundary to antenna", "Click Radiation boundary and assign to airbox"},
    {"s09", SoftwareTag::COMSOL, FieldTag::Acoustic, DifficultyTag::Normal, false, 9, true,
     "Create a frequency sweep study for the speaker enclosure.", "Click Study and add frequency domain sweep",
     "Click Study and add frequency domain sweep", "Add a study"},
    {"s10", SoftwareTag::ICEPAK, FieldTag::Thermal, DifficultyTag::Easy, false, 1, true,
     "Mesh the PCB model before running the thermal analysis.", "Click Mesh to generate the PCB grid",
     "Click Mesh to generate the PCB grid", "Click Mesh"},
}};

Sample make_sample(const Spec& sp) {
  Sample s;
  s.id = sp.id;
  s.image = ImageMeta(kWidth, kHeight, ImageRef{fmt::format("images/{}.png", sp.id), ""});
  s.question = sp.question;
  s.gt_answer = sp.gt_answer;
  s.gt_bbox = sp.tree ? tree_box(sp.slot) : button_box(sp.slot);
  s.combo = ComboTag(sp.software, sp.field);
  s.difficulty = sp.difficulty;
  s.crops.push_back({ViewLabel::Large, BBox(0, 0, kWidth - 1, kHeight - 1), ""});

  // Middle: about half the screen area, placed so the target stays inside.
  const int mw = 452, mh = 254;
  const int cx = (s.gt_bbox.x_min + s.gt_bbox.x_max) / 2;
  const int cy = (s.gt_bbox.y_min + s.gt_bbox.y_max) / 2;
  const int mx = std::clamp(cx - mw / 2, 0, kWidth - mw);
  const int my = std::clamp(cy - mh / 2, 0, kHeight - mh);
  s.crops.push_back({ViewLabel::Middle, BBox(mx, my, mx + mw - 1, my + mh - 1), ""});

  // Small: the option bar that holds the target (ribbon or model tree).
  if (sp.small_view) {
    const BBox bar = sp.tree ? BBox(0, kRibbonBottom + 1, kPanelRight, kHeight - 1)
                             : BBox(0, kRibbonTop, kWidth - 1, kRibbonBottom);
    s.crops.push_back({ViewLabel::Small, bar, ""});
  }
  return s;
}

enum class Click { Hit, HorizontalOnly, VerticalOnly, Far };

// A click of the given kind inside the view, in view pixels.
PixelPoint click_in(const SampleView& v, Click kind) {
  const auto& b = v.view_bbox;
  const int w = v.view_meta.width, h = v.view_meta.height;
  const int cx = (b.x_min + b.x_max) / 2, cy = (b.y_min + b.y_max) / 2;
  auto outside = [](int lo, int hi, int extent, int span) {
    int p = hi + 2 * span;
    if (p >= extent) p = lo - 2 * span;
    return std::clamp(p, 0, extent - 1);
  };
  switch (kind) {
    case Click::Hit: return {cx, cy};
    case Click::HorizontalOnly: return {cx, outside(b.y_min, b.y_max, h, b.height())};
    case Click::VerticalOnly: return {outside(b.x_min, b.x_max, w, b.width()), cy};
    case Click::Far: {
      const int fx = b.x_max < w / 2 ? w - 1 - w / 10 : w / 10;
      const int fy = b.y_max < h / 2 ? h - 1 - h / 10 : h / 10;
      return {fx, fy};
    }
  }
  return {cx, cy};
}

Click miss_kind(int i) {
  static constexpr std::array<Click, 3> kinds{Click::HorizontalOnly, Click::VerticalOnly, Click::Far};
  return kinds[static_cast<std::size_t>(i) % kinds.size()];
}

std::string uitars_text(const PixelPoint& p) { return fmt::format("click({}, {})", p.x, p.y); }

std::string aguvis_text(const SampleView& v, const PixelPoint& p) {
  return fmt::format("({:.4f}, {:.4f})", static_cast<double>(p.x) / v.view_meta.width,
                     static_cast<double>(p.y) / v.view_meta.height);
}

json logprobs(bool confident_yes) {
  return confident_yes ? json{{"text", "Yes"}, {"logprobs", {{"Yes", -0.2}, {"No", -1.7}}}}
                       : json{{"text", "No"}, {"logprobs", {{"Yes", -1.4}, {"No", -0.3}}}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace

Raster render_mock_gui(int width, int height, SoftwareTag software, FieldTag field, unsigned seed) {
  std::mt19937 rng(seed);
  const auto pal = palette(software);
  Raster img(width, height, Rgb{250, 250, 250});
  img.fill_rect(0, 0, width - 1, kTitleBottom, {45, 45, 48});
  img.fill_rect(0, kRibbonTop, width - 1, kRibbonBottom, pal.ribbon);
  img.fill_rect(0, kRibbonBottom, width - 1, kRibbonBottom, shade(pal.ribbon, -60));

  for (int i = 0; 6 + i * kButtonPitch + kButtonSize <= width; ++i) {
    const auto b = button_box(i);
    const int d = static_cast<int>(rng() % 31) - 15;
    img.fill_rect(b.x_min, b.y_min, b.x_max, b.y_max, shade(pal.button, d));
    img.fill_rect(b.x_min + 7, b.y_min + 5, b.x_max - 7, b.y_min + 14, shade(pal.accent, d));
    img.fill_rect(b.x_min + 4, b.y_max - 6, b.x_max - 4, b.y_max - 4, {60, 60, 60});
  }

  img.fill_rect(0, kRibbonBottom + 1, kPanelRight, height - 1, {236, 236, 236});
  img.fill_rect(kPanelRight, kRibbonBottom + 1, kPanelRight, height - 1, {180, 180, 180});
  for (int j = 0; kTreeTop + j * kTreePitch + kTreeHeight <= height; ++j) {
    const auto t = tree_box(j);
    img.fill_rect(t.x_min, t.y_min, t.x_max, t.y_max, {214, 214, 220});
    const int len = 30 + static_cast<int>(rng() % 50);
    img.fill_rect(t.x_min + 14, t.y_min + 5, std::min(t.x_max - 2, t.x_min + 14 + len), t.y_min + 8, {70, 70, 80});
    img.fill_rect(t.x_min + 2, t.y_min + 3, t.x_min + 9, t.y_min + 10, pal.accent);
  }

  for (int x = kPanelRight + 40; x < width; x += 40) img.fill_rect(x, kRibbonBottom + 1, x, height - 1, {228, 228, 228});
  for (int y = kRibbonBottom + 40; y < height; y += 40) img.fill_rect(kPanelRight + 1, y, width - 1, y, {228, 228, 228});

  const int cx = (kPanelRight + width) / 2, cy = (kRibbonBottom + height) / 2;
  const int r = std::min(width - kPanelRight, height - kRibbonBottom) / 4;
  switch (field) {
    case FieldTag::Acoustic:
      for (int y = cy - r; y <= cy + r; ++y)
        for (int x = cx - r; x <= cx + r; ++x)
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y, shade(pal.accent, 60));
      break;
    case FieldTag::Optical: img.fill_rect(cx - 2 * r, cy - r / 6, cx + 2 * r, cy + r / 6, shade(pal.accent, 40)); break;
    case FieldTag::Mechanical:
      img.fill_rect(cx - r, cy - r, cx - r / 2, cy + r, shade(pal.accent, 50));
      img.fill_rect(cx - r, cy + r / 2, cx + r, cy + r, shade(pal.accent, 50));
      break;
    case FieldTag::Thermal:
      for (int k = 0; k < 6; ++k) img.fill_rect(cx - r + k * r / 3, cy - r, cx - r + k * r / 3 + r / 8, cy + r, {220, 120, 60});
      img.fill_rect(cx - r, cy + r - r / 6, cx + r, cy + r, {160, 80, 40});
      break;
    case FieldTag::Magnetical:
      for (int k = 0; k < 5; ++k) img.fill_rect(cx - r, cy - r + k * r / 2, cx + r, cy - r + k * r / 2 + 3, {184, 115, 51});
      break;
  }
  return img;
}

void write_synthetic_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "scripted");

  Dataset d;
  json mllm = json::object(), uitars = json::object(), aguvis = json::object();
  json judge = json::object();
  for (std::size_t i = 0; i < kSpecs.size(); ++i) {
    const auto& sp = kSpecs[i];
    Sample s = make_sample(sp);
    const auto img = render_mock_gui(kWidth, kHeight, sp.software, sp.field, 1000u + static_cast<unsigned>(i));
    save_png(img, dir / s.image.image.path);
    s.image.image.sha256 = sha256_hex(read_file_bytes(dir / s.image.image.path));

    const int n = static_cast<int>(i);
    mllm[fmt::format("comprehend:{}:*", s.id)] = sp.mllm_answer;
    aguvis[fmt::format("comprehend:{}:*", s.id)] = sp.aguvis_answer;
    for (auto label : kAllViews) {
      if (!s.has_view(label)) continue;
      const auto v = derive_view(s, label);
      const auto view = std::string(to_string(label));
      const int vi = static_cast<int>(label);

      // Grounding the raw question: right more often on smaller views.
      const bool g_hit = vi == 0 ? n % 3 == 0 : vi == 1 ? n % 2 == 0 : n % 4 != 3;
      // Grounding the comprehender's answer: right unless the answer is off.
      const bool mg_hit = vi == 0 ? (n % 2 == 0 || n % 3 == 0) : vi == 1 ? (n != 5 && n != 7) : n != 7;
      const auto g_pt = click_in(v, g_hit ? Click::Hit : miss_kind(n));
      const auto mg_pt = click_in(v, mg_hit ? Click::Hit : miss_kind(n + 1));
      uitars[fmt::format("ground:{}:{}:question", s.id, view)] = uitars_text(g_pt);
      uitars[fmt::format("ground:{}:{}:answer", s.id, view)] = uitars_text(mg_pt);

      // The validator is right about the click except for one deliberately
      // misjudged candidate, and reports a tie on s05/Middle.
      bool yes0 = mg_hit, yes1 = g_hit;
      if (s.id == "s08" && label == ViewLabel::Large) yes0 = true;
      if (s.id == "s05" && label == ViewLabel::Middle) yes0 = yes1;
      mllm[fmt::format("validate:{}:{}:p0", s.id, view)] = logprobs(yes0);
      mllm[fmt::format("validate:{}:{}:p1", s.id, view)] = logprobs(yes1);

      const bool a_hit = vi == 0 ? n % 4 == 1 : vi == 1 ? n % 2 == 1 : n % 3 != 2;
      const auto a_pt = click_in(v, a_hit ? Click::Hit : miss_kind(n + 2));
      aguvis[fmt::format("ground:{}:{}:question", s.id, view)] =
          s.id == "s03" && label == ViewLabel::Large ? "I cannot determine the target element." : aguvis_text(v, a_pt);
    }
    d.samples.push_back(std::move(s));
  }
  // One unparsable verdict, to exercise abstention.
  judge["judge:s04:Large:precision#0"] = "maybe";

  save_manifest(d, dir / "manifest.jsonl");
  auto dump = [&](const json& responses, const char* name) {
    write_text(dir / "scripted" / name, json{{"responses", responses}}.dump(2) + "\n");
  };
  dump(mllm, "mllm.json");
  dump(uitars, "uitars-sim.json");
  dump(aguvis, "aguvis-sim.json");
  dump(judge, "judge.json");

  const json config{
      {"dataset", "manifest.jsonl"},
      {"backends",
       json::array({
           {{"name", "mllm"}, {"kind", "scripted"}, {"roles", {"comprehend", "validate"}}, {"fixture", "scripted/mllm.json"}},
           {{"name", "uitars-sim"},
            {"kind", "scripted"},
            {"roles", {"ground"}},
            {"coordinate_space", "absolute_pixels"},
            {"fixture", "scripted/uitars-sim.json"}},
           {{"name", "aguvis-sim"},
            {"kind", "scripted"},
            {"roles", {"comprehend", "ground"}},
            {"coordinate_space", "normalized"},
            {"fixture", "scripted/aguvis-sim.json"}},
           {{"name", "judge"}, {"kind", "scripted"}, {"roles", {"judge"}}, {"fixture", "scripted/judge.json"}},
       })},
      {"agents", json::array({
                     {{"name", "edagent"}, {"kind", "edagent"}, {"comprehender", "mllm"}, {"grounder", "uitars-sim"}, {"validator", "mllm"}},
                     {{"name", "uitars"}, {"kind", "single"}, {"grounder", "uitars-sim"}},
                     {{"name", "aguvis"}, {"kind", "single"}, {"answerer", "aguvis-sim"}, {"grounder", "aguvis-sim"}},
                     {{"name", "mllm-uitars"}, {"kind", "single"}, {"answerer", "mllm"}, {"grounder", "uitars-sim"}},
                 })},
      {"judge", "judge"},
      {"judge_runs", 5},
      {"router", {{"selection", "comparative"}, {"confidence_mode", "logit_diff_sigmoid"}}},
      {"retry", {{"max_attempts", 5}, {"base_backoff_ms", 500}, {"backoff_factor", 2.0}, {"per_backend_rate", 0.0}, {"max_in_flight", 8}}},
      {"views", {"Large", "Middle", "Small"}},
      {"seed", 2025},
      {"out", "runs"},
      {"workers", 4},
      {"top_k", 6},
  };
  write_text(dir / "dryrun.json", config.dump(2) + "\n");
}

}  // namespace edabench
