#include <cmath>
#include <random>

#include "doctest.h"
#include "edabench/core.hpp"

using namespace edabench;

TEST_CASE("tags parse and print") {
  CHECK(parse_field("Electro-Thermal") == FieldTag::Thermal);
  CHECK(parse_field("magnetical") == FieldTag::Magnetical);
  CHECK(parse_software("icepak") == SoftwareTag::ICEPAK);
  CHECK(parse_difficulty("Hard") == DifficultyTag::Hard);
  CHECK(parse_view("middle") == ViewLabel::Middle);
  CHECK_THROWS_AS(parse_field("Fluid"), Error);
  CHECK(to_string(ViewLabel::Small) == "Small");
  CHECK(kAllFields.size() == 5);
  CHECK(kAllSoftware.size() == 5);
}

TEST_CASE("exactly eight combos are valid") {
  int valid = 0;
  for (auto s : kAllSoftware)
    for (auto f : kAllFields) valid += ComboTag::is_valid(s, f) ? 1 : 0;
  CHECK(valid == 8);

  const auto combos = all_combos();
  const std::vector<std::string> names{"CO-Acoustic", "CO-Optical",   "CO-Mechanical", "CO-Thermal",
                                       "Fl-Thermal",  "IC-Thermal",   "CS-Magnetical", "HF-Magnetical"};
  for (std::size_t i = 0; i < combos.size(); ++i) {
    CHECK(combos[i].name() == names[i]);
    CHECK(combos[i].index() == static_cast<int>(i));
    CHECK(ComboTag::from_name(names[i]) == combos[i]);
  }
  try {
    ComboTag(SoftwareTag::Flotherm, FieldTag::Acoustic);
    FAIL("expected InvalidCombo");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidCombo);
  }
}

TEST_CASE("bbox membership is edge inclusive") {
  const BBox b(10, 10, 20, 20);
  CHECK(bbox_contains(b, {15, 15}));
  CHECK(bbox_contains(b, {20, 10}));
  CHECK(bbox_contains(b, {10, 20}));
  CHECK_FALSE(bbox_contains(b, {21, 15}));
  CHECK_FALSE(bbox_contains(b, {15, 9}));
  CHECK(b.width() == 11);
}

TEST_CASE("bbox rejects inverted or negative corners") {
  CHECK_THROWS_AS(BBox(5, 0, 4, 0), Error);
  CHECK_THROWS_AS(BBox(-1, 0, 4, 4), Error);
}

TEST_CASE("bbox membership with mismatched frames is a contract violation") {
  const BBox b(0, 0, 5, 5, make_frame("s1", ViewLabel::Large));
  try {
    bbox_contains(b, PixelPoint{1, 1, make_frame("s1", ViewLabel::Small)});
    FAIL("expected ContractViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ContractViolation);
  }
}

TEST_CASE("bbox membership matches four comparisons on small grids") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int x0 = static_cast<int>(rng() % 8), y0 = static_cast<int>(rng() % 8);
    const int x1 = x0 + static_cast<int>(rng() % 8), y1 = y0 + static_cast<int>(rng() % 8);
    const BBox b(x0, y0, x1, y1);
    for (int y = 0; y < 18; ++y)
      for (int x = 0; x < 18; ++x) CHECK(bbox_contains(b, {x, y}) == (x0 <= x && x <= x1 && y0 <= y && y <= y1));
  }
}

TEST_CASE("norm point clamps") {
  CHECK(NormPoint(-0.5, 1.5) == NormPoint(0.0, 1.0));
  CHECK(NormPoint(std::nan(""), 0.3).x() == 0.0);
}

TEST_CASE("denormalize rounds half up and clamps to the lattice") {
  const ImageMeta m(3840, 2160);
  CHECK(denormalize({0.5, 0.5}, m) == PixelPoint{1920, 1080});
  CHECK(denormalize({0.0, 0.0}, m) == PixelPoint{0, 0});
  CHECK(denormalize({1.0, 1.0}, m) == PixelPoint{3839, 2159});
  CHECK(denormalize({0.0, 0.0}, ImageMeta(1, 1)) == PixelPoint{0, 0});
  CHECK(denormalize({1.0, 1.0}, ImageMeta(1, 1)) == PixelPoint{0, 0});
  const auto f = make_frame("a", ViewLabel::Middle);
  CHECK(denormalize({0.1, 0.1}, m, f).frame == f);
}

TEST_CASE("denormalize is monotone and in range") {
  const ImageMeta m(7, 5);
  int prev = -1;
  for (int i = 0; i <= 1000; ++i) {
    const auto p = denormalize({i / 1000.0, i / 1000.0}, m);
    CHECK(p.x >= prev);
    CHECK(p.x >= 0);
    CHECK(p.x <= 6);
    CHECK(p.y <= 4);
    prev = p.x;
  }
}

TEST_CASE("remap into a crop translates and rejects boxes that leave it") {
  const CropSpec c{ViewLabel::Middle, BBox(100, 50, 400, 300), ""};
  CHECK(remap_bbox_to_crop(BBox(100, 50, 120, 60), c) == BBox(0, 0, 20, 10));
  CHECK(remap_bbox_to_crop(BBox(0, 0, 10, 10), CropSpec{ViewLabel::Large, BBox(0, 0, 99, 99), ""}) ==
        BBox(0, 0, 10, 10));

  const CropSpec small{ViewLabel::Small, BBox(10, 10, 50, 50), ""};
  try {
    remap_bbox_to_crop(BBox(5, 5, 8, 8), small);
    FAIL("expected NotInView");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInView);
    CHECK(std::string(e.what()).find("outside") != std::string::npos);
  }
  try {
    remap_bbox_to_crop(BBox(5, 5, 20, 20), small);
    FAIL("expected NotInView");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInView);
    CHECK(std::string(e.what()).find("partial") != std::string::npos);
  }
}

TEST_CASE("remap then inverse translation is the identity") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const int cx = static_cast<int>(rng() % 50), cy = static_cast<int>(rng() % 50);
    const CropSpec c{ViewLabel::Middle, BBox(cx, cy, cx + 60, cy + 60), ""};
    const int bx = cx + static_cast<int>(rng() % 30), by = cy + static_cast<int>(rng() % 30);
    const BBox b(bx, by, bx + static_cast<int>(rng() % 30), by + static_cast<int>(rng() % 30));
    const auto r = remap_bbox_to_crop(b, c);
    CHECK(BBox(r.x_min + cx, r.y_min + cy, r.x_max + cx, r.y_max + cy) == b);
  }
}

TEST_CASE("image meta requires a positive size") {
  CHECK_THROWS_AS(ImageMeta(0, 10), Error);
  CHECK_NOTHROW(ImageMeta(1, 1));
}

TEST_CASE("error codes round trip through their names") {
  for (auto c : {ErrorCode::NotInView, ErrorCode::JudgeParseError, ErrorCode::EmptyRun}) {
    CHECK(error_code_from_string(to_string(c)) == c);
  }
  const Error e(ErrorCode::BoundsError, "x too big");
  CHECK(std::string(e.what()) == "BoundsError: x too big");
}
