#include "edabench/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/format.h>

namespace edabench {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<Enum, N>& all, std::string_view what) {
  for (auto v : all) {
    if (iequals(s, to_string(v))) return v;
  }
  throw Error(ErrorCode::ParseError, fmt::format("unknown {} '{}'", what, s));
}

struct ComboEntry {
  SoftwareTag software;
  FieldTag field;
  std::string_view name;
};

constexpr std::array<ComboEntry, 8> kCombos{{
    {SoftwareTag::COMSOL, FieldTag::Acoustic, "CO-Acoustic"},
    {SoftwareTag::COMSOL, FieldTag::Optical, "CO-Optical"},
    {SoftwareTag::COMSOL, FieldTag::Mechanical, "CO-Mechanical"},
    {SoftwareTag::COMSOL, FieldTag::Thermal, "CO-Thermal"},
    {SoftwareTag::Flotherm, FieldTag::Thermal, "Fl-Thermal"},
    {SoftwareTag::ICEPAK, FieldTag::Thermal, "IC-Thermal"},
    {SoftwareTag::CST, FieldTag::Magnetical, "CS-Magnetical"},
    {SoftwareTag::HFSS, FieldTag::Magnetical, "HF-Magnetical"},
}};

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ContractViolation: return "ContractViolation";
    case ErrorCode::NotInView: return "NotInView";
    case ErrorCode::MissingView: return "MissingView";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::BoundsError: return "BoundsError";
    case ErrorCode::InvalidCombo: return "InvalidCombo";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ImageError: return "ImageError";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::TransientFailure: return "TransientFailure";
    case ErrorCode::EmptyAnswer: return "EmptyAnswer";
    case ErrorCode::GroundingParseError: return "GroundingParseError";
    case ErrorCode::ValidatorParseError: return "ValidatorParseError";
    case ErrorCode::JudgeParseError: return "JudgeParseError";
    case ErrorCode::ConfidenceModeError: return "ConfidenceModeError";
    case ErrorCode::RouterFailure: return "RouterFailure";
    case ErrorCode::AnswerScoreUnavailable: return "AnswerScoreUnavailable";
    case ErrorCode::Undefined: return "Undefined";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownRun: return "UnknownRun";
  }
  return "Unknown";
}

ErrorCode error_code_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::UnknownRun); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::ParseError, fmt::format("unknown error code '{}'", name));
}

std::string_view to_string(FieldTag v) {
  switch (v) {
    case FieldTag::Acoustic: return "Acoustic";
    case FieldTag::Optical: return "Optical";
    case FieldTag::Mechanical: return "Mechanical";
    case FieldTag::Thermal: return "Thermal";
    case FieldTag::Magnetical: return "Magnetical";
  }
  return "?";
}

std::string_view to_string(SoftwareTag v) {
  switch (v) {
    case SoftwareTag::COMSOL: return "COMSOL";
    case SoftwareTag::Flotherm: return "Flotherm";
    case SoftwareTag::ICEPAK: return "ICEPAK";
    case SoftwareTag::CST: return "CST";
    case SoftwareTag::HFSS: return "HFSS";
  }
  return "?";
}

std::string_view to_string(DifficultyTag v) {
  switch (v) {
    case DifficultyTag::Easy: return "Easy";
    case DifficultyTag::Normal: return "Normal";
    case DifficultyTag::Hard: return "Hard";
  }
  return "?";
}

std::string_view to_string(ViewLabel v) {
  switch (v) {
    case ViewLabel::Large: return "Large";
    case ViewLabel::Middle: return "Middle";
    case ViewLabel::Small: return "Small";
  }
  return "?";
}

FieldTag parse_field(std::string_view s) {
  constexpr std::string_view prefix = "electro-";
  if (s.size() > prefix.size() && iequals(s.substr(0, prefix.size()), prefix)) {
    s.remove_prefix(prefix.size());
  }
  return parse_enum(s, kAllFields, "field");
}

SoftwareTag parse_software(std::string_view s) { return parse_enum(s, kAllSoftware, "software"); }
DifficultyTag parse_difficulty(std::string_view s) {
  return parse_enum(s, kAllDifficulties, "difficulty");
}
ViewLabel parse_view(std::string_view s) { return parse_enum(s, kAllViews, "view"); }

ComboTag::ComboTag(SoftwareTag software, FieldTag field) : software_(software), field_(field) {
  if (!is_valid(software, field)) {
    throw Error(ErrorCode::InvalidCombo,
                fmt::format("{} does not pair with {}", to_string(software), to_string(field)));
  }
}

bool ComboTag::is_valid(SoftwareTag software, FieldTag field) noexcept {
  return std::any_of(kCombos.begin(), kCombos.end(), [&](const ComboEntry& e) {
    return e.software == software && e.field == field;
  });
}

int ComboTag::index() const {
  for (std::size_t i = 0; i < kCombos.size(); ++i) {
    if (kCombos[i].software == software_ && kCombos[i].field == field_) return static_cast<int>(i);
  }
  return -1;  // unreachable for constructed objects
}

std::string ComboTag::name() const { return std::string(kCombos[static_cast<std::size_t>(index())].name); }

ComboTag ComboTag::from_name(std::string_view name) {
  for (const auto& e : kCombos) {
    if (iequals(e.name, name)) return ComboTag(e.software, e.field);
  }
  throw Error(ErrorCode::InvalidCombo, fmt::format("unknown combo '{}'", name));
}

std::array<ComboTag, 8> all_combos() {
  return {ComboTag(kCombos[0].software, kCombos[0].field), ComboTag(kCombos[1].software, kCombos[1].field),
          ComboTag(kCombos[2].software, kCombos[2].field), ComboTag(kCombos[3].software, kCombos[3].field),
          ComboTag(kCombos[4].software, kCombos[4].field), ComboTag(kCombos[5].software, kCombos[5].field),
          ComboTag(kCombos[6].software, kCombos[6].field), ComboTag(kCombos[7].software, kCombos[7].field)};
}

FrameId make_frame(std::string_view sample_id, ViewLabel view) {
  return FrameId{fmt::format("{}/{}", sample_id, to_string(view))};
}

BBox::BBox(int x0, int y0, int x1, int y1, FrameId f)
    : x_min(x0), y_min(y0), x_max(x1), y_max(y1), frame(std::move(f)) {
  if (x0 < 0 || y0 < 0 || x1 < x0 || y1 < y0) {
    throw Error(ErrorCode::ContractViolation,
                fmt::format("malformed bbox ({},{},{},{})", x0, y0, x1, y1));
  }
}

NormPoint::NormPoint(double x, double y) {
  auto clamp01 = [](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); };
  x_ = clamp01(x);
  y_ = clamp01(y);
}

ImageMeta::ImageMeta(int w, int h, ImageRef ref) : width(w), height(h), image(std::move(ref)) {
  if (w < 1 || h < 1) {
    throw Error(ErrorCode::ContractViolation, fmt::format("image size {}x{} is empty", w, h));
  }
}

bool bbox_contains(const BBox& b, const PixelPoint& p) {
  if (b.frame != p.frame) {
    throw Error(ErrorCode::ContractViolation,
                fmt::format("point in frame '{}' tested against box in frame '{}'", p.frame.name,
                            b.frame.name));
  }
  return b.x_min <= p.x && p.x <= b.x_max && b.y_min <= p.y && p.y <= b.y_max;
}

PixelPoint denormalize(const NormPoint& p, const ImageMeta& m, FrameId frame) {
  auto axis = [](double v, int extent) {
    const auto px = static_cast<long long>(std::floor(v * extent + 0.5));
    return static_cast<int>(std::clamp<long long>(px, 0, extent - 1));
  };
  return PixelPoint{axis(p.x(), m.width), axis(p.y(), m.height), std::move(frame)};
}

BBox remap_bbox_to_crop(const BBox& b, const CropSpec& c, FrameId view_frame) {
  const auto& r = c.rect;
  const bool disjoint = b.x_max < r.x_min || b.x_min > r.x_max || b.y_max < r.y_min || b.y_min > r.y_max;
  const bool contained = b.x_min >= r.x_min && b.x_max <= r.x_max && b.y_min >= r.y_min && b.y_max <= r.y_max;
  if (!contained) {
    throw Error(ErrorCode::NotInView,
                fmt::format("bbox ({},{},{},{}) {} {} crop ({},{},{},{})", b.x_min, b.y_min, b.x_max,
                            b.y_max, disjoint ? "lies outside" : "is only partially inside",
                            to_string(c.label), r.x_min, r.y_min, r.x_max, r.y_max));
  }
  return BBox(b.x_min - r.x_min, b.y_min - r.y_min, b.x_max - r.x_min, b.y_max - r.y_min,
              std::move(view_frame));
}

}  // namespace edabench
