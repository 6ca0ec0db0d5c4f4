#include <set>

#include "doctest.h"
#include "edabench/ingestion.hpp"
#include "edabench/synthetic.hpp"
#include "helpers.hpp"

using namespace edabench;
using nlohmann::json;
using testing::TempDir;

namespace {

json record(const std::string& id, const std::string& software = "COMSOL", const std::string& field = "Acoustic") {
  return {{"id", id},
          {"image_path", "img.png"},
          {"width", 64},
          {"height", 48},
          {"question", "Open the boundary settings."},
          {"gt_answer", "Click Boundary"},
          {"gt_bbox", {10, 10, 20, 20}},
          {"field", field},
          {"software", software},
          {"difficulty", "Easy"},
          {"crops", json::array({{{"label", "Large"}, {"rect", {0, 0, 63, 47}}},
                                 {{"label", "Middle"}, {"rect", {5, 5, 40, 30}}}})}};
}

void write_lines(const std::filesystem::path& p, const std::vector<json>& recs) {
  std::string text;
  for (const auto& r : recs) text += r.dump() + "\n";
  testing::spit(p, text);
}

}  // namespace

TEST_CASE("well-formed manifest loads every record") {
  TempDir t;
  save_png(Raster(64, 48, {200, 200, 200}), t / "img.png");
  write_lines(t / "m.jsonl", {record("a"), record("b"), record("c", "HFSS", "Magnetical")});
  const auto d = load_manifest(t / "m.jsonl");
  REQUIRE(d.samples.size() == 3);
  CHECK(d.samples[2].combo.name() == "HF-Magnetical");
  CHECK(d.find("b").gt_bbox == BBox(10, 10, 20, 20));
  CHECK(d.manifest_hash.size() == 64);
  CHECK(load_manifest(t / "m.jsonl").manifest_hash == d.manifest_hash);
}

TEST_CASE("invalid combo is rejected with its code") {
  TempDir t;
  write_lines(t / "m.jsonl", {record("a"), record("bad", "Flotherm", "Acoustic")});
  try {
    load_manifest(t / "m.jsonl");
    FAIL("expected InvalidCombo");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidCombo);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  const auto r = validate_manifest(t / "m.jsonl");
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].sample_id == "bad");
  CHECK(r.violations[0].line == 2);
  CHECK(r.valid.size() == 1);
}

TEST_CASE("bbox outside the image is a bounds error") {
  TempDir t;
  auto r = record("a");
  r["gt_bbox"] = {10, 10, 64, 20};
  write_lines(t / "m.jsonl", {r});
  try {
    load_manifest(t / "m.jsonl");
    FAIL("expected BoundsError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundsError);
  }
}

TEST_CASE("validation collects every violation and keeps valid records") {
  TempDir t;
  auto no_q = record("q");
  no_q.erase("question");
  auto two_middle = record("m");
  two_middle["crops"].push_back({{"label", "Middle"}, {"rect", {0, 0, 10, 10}}});
  auto bad_large = record("l");
  bad_large["crops"][0]["rect"] = {0, 0, 10, 10};
  std::string text = record("ok").dump() + "\n" + "{not json\n" + record("ok").dump() + "\n" + no_q.dump() + "\n" +
                     two_middle.dump() + "\n" + bad_large.dump() + "\n";
  testing::spit(t / "m.jsonl", text);
  const auto r = validate_manifest(t / "m.jsonl");
  CHECK(r.lines == 6);
  CHECK(r.valid.size() == 1);
  REQUIRE(r.violations.size() == 5);
  CHECK(r.violations[0].code == ErrorCode::ParseError);
  CHECK(r.violations[1].code == ErrorCode::DuplicateId);
  std::set<std::size_t> lines;
  for (const auto& v : r.violations) lines.insert(v.line);
  CHECK(lines == std::set<std::size_t>{2, 3, 4, 5, 6});
}

TEST_CASE("image checks catch a size mismatch") {
  TempDir t;
  save_png(Raster(10, 10), t / "img.png");
  write_lines(t / "m.jsonl", {record("a")});
  CHECK(validate_manifest(t / "m.jsonl", false).clean());
  const auto r = validate_manifest(t / "m.jsonl", true);
  REQUIRE(r.violations.size() == 1);
  CHECK(r.violations[0].code == ErrorCode::BoundsError);
}

TEST_CASE("unreadable manifest is an io error") {
  try {
    validate_manifest("/nonexistent/manifest.jsonl");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("manifest round trips field for field") {
  TempDir t;
  write_lines(t / "m.jsonl", {record("a"), record("b", "CST", "Magnetical")});
  const auto d = load_manifest(t / "m.jsonl");
  save_manifest(d, t / "again.jsonl");
  const auto d2 = load_manifest(t / "again.jsonl");
  CHECK(d2.samples == d.samples);
  CHECK(sample_from_json(sample_to_json(d.samples[1])) == d.samples[1]);
}

TEST_CASE("derive view translates the ground truth") {
  Sample s;
  s.id = "x";
  s.image = ImageMeta(3840, 2160, {"x.png", ""});
  s.question = "q";
  s.gt_answer = "a";
  s.gt_bbox = BBox(1000, 600, 1040, 620);
  s.crops = {{ViewLabel::Large, BBox(0, 0, 3839, 2159), ""},
             {ViewLabel::Middle, BBox(960, 540, 2880, 1620), ""},
             {ViewLabel::Small, BBox(3000, 1700, 3839, 2159), ""}};

  const auto large = derive_view(s, ViewLabel::Large);
  CHECK(large.view_bbox.x_min == 1000);
  CHECK(large.view_meta.width == 3840);

  const auto mid = derive_view(s, ViewLabel::Middle);
  CHECK(mid.view_bbox == BBox(40, 60, 80, 80, mid.frame()));
  CHECK(mid.view_meta.width == 1921);

  try {
    derive_view(s, ViewLabel::Small);
    FAIL("expected NotInView");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInView);
  }
  s.crops.pop_back();
  try {
    derive_view(s, ViewLabel::Small);
    FAIL("expected MissingView");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingView);
  }
}

TEST_CASE("large view raster is the original and crops cut the same pixels") {
  TempDir t;
  write_synthetic_dataset(t.path());
  const auto d = load_manifest(t / "manifest.jsonl");
  const auto& s = d.samples.front();
  const auto original = load_png(t / s.image.image.path);
  CHECK(load_view_raster(d, s, ViewLabel::Large) == original);
  const auto mid = load_view_raster(d, s, ViewLabel::Middle);
  CHECK(mid == original.crop(s.crop(ViewLabel::Middle)->rect));
}

TEST_CASE("every synthetic view keeps its target inside the view") {
  TempDir t;
  write_synthetic_dataset(t.path());
  const auto d = load_manifest(t / "manifest.jsonl");
  CHECK(d.samples.size() == 10);
  std::set<std::string> combos;
  for (const auto& s : d.samples) {
    combos.insert(s.combo.name());
    for (auto v : kAllViews) {
      if (!s.has_view(v)) continue;
      const auto sv = derive_view(s, v);
      CHECK(sv.view_bbox.x_max < sv.view_meta.width);
      CHECK(sv.view_bbox.y_max < sv.view_meta.height);
    }
  }
  CHECK(combos.size() == 8);
  CHECK(validate_manifest(t / "manifest.jsonl", true).clean());
}

TEST_CASE("synthetic dataset is reproducible byte for byte") {
  TempDir a, b;
  write_synthetic_dataset(a.path());
  write_synthetic_dataset(b.path());
  CHECK(testing::tree_bytes(a.path()) == testing::tree_bytes(b.path()));
  CHECK(testing::tree_bytes(a.path()) == testing::tree_bytes(testing::mini_dir()));
}

TEST_CASE("shuffled order is a seeded permutation") {
  Dataset d;
  for (const char* id : {"a", "b", "c"}) {
    Sample s;
    s.id = id;
    d.samples.push_back(s);
  }
  const auto p = shuffled_order(d, 7);
  CHECK(p == shuffled_order(d, 7));
  CHECK(std::set<std::string>(p.begin(), p.end()) == std::set<std::string>{"a", "b", "c"});
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 10; ++seed) differs = differs || shuffled_order(d, seed) != p;
  CHECK(differs);
  CHECK(shuffled_order(Dataset{}, 1).empty());
}
