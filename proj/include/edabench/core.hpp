#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "edabench/error.hpp"

namespace edabench {

enum class FieldTag { Acoustic, Optical, Mechanical, Thermal, Magnetical };
enum class SoftwareTag { COMSOL, Flotherm, ICEPAK, CST, HFSS };
enum class DifficultyTag { Easy, Normal, Hard };
enum class ViewLabel { Large, Middle, Small };

inline constexpr std::array kAllFields{FieldTag::Acoustic, FieldTag::Optical, FieldTag::Mechanical,
                                       FieldTag::Thermal, FieldTag::Magnetical};
inline constexpr std::array kAllSoftware{SoftwareTag::COMSOL, SoftwareTag::Flotherm,
                                         SoftwareTag::ICEPAK, SoftwareTag::CST, SoftwareTag::HFSS};
inline constexpr std::array kAllDifficulties{DifficultyTag::Easy, DifficultyTag::Normal,
                                             DifficultyTag::Hard};
inline constexpr std::array kAllViews{ViewLabel::Large, ViewLabel::Middle, ViewLabel::Small};

std::string_view to_string(FieldTag v);
std::string_view to_string(SoftwareTag v);
std::string_view to_string(DifficultyTag v);
std::string_view to_string(ViewLabel v);

// Parsers accept the canonical names above, case-insensitively. Field names
// also accept the "Electro-" prefixed spellings (Electro-Thermal etc).
FieldTag parse_field(std::string_view s);
SoftwareTag parse_software(std::string_view s);
DifficultyTag parse_difficulty(std::string_view s);
ViewLabel parse_view(std::string_view s);

/// A valid software/field pairing. Only eight exist; construction of any other
/// pair throws InvalidCombo.
class ComboTag {
 public:
  ComboTag(SoftwareTag software, FieldTag field);

  SoftwareTag software() const noexcept { return software_; }
  FieldTag field() const noexcept { return field_; }

  /// Short display name, e.g. "CO-Acoustic", "Fl-Thermal".
  std::string name() const;
  /// Position in the canonical ordering used by every report (0..7).
  int index() const;

  static bool is_valid(SoftwareTag software, FieldTag field) noexcept;
  static ComboTag from_name(std::string_view name);

  friend bool operator==(const ComboTag&, const ComboTag&) = default;
  friend auto operator<=>(const ComboTag& a, const ComboTag& b) { return a.index() <=> b.index(); }

 private:
  SoftwareTag software_;
  FieldTag field_;
};

std::array<ComboTag, 8> all_combos();

/// Identifies the pixel lattice a coordinate lives in (one view of one sample).
/// A default-constructed frame is the anonymous frame; it only matches itself.
struct FrameId {
  std::string name;
  friend bool operator==(const FrameId&, const FrameId&) = default;
};

FrameId make_frame(std::string_view sample_id, ViewLabel view);

/// Axis-aligned integer rectangle, top-left origin, y downward. Both corners
/// are inside the box.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  FrameId frame{};

  BBox() = default;
  BBox(int x0, int y0, int x1, int y1, FrameId f = {});

  int width() const noexcept { return x_max - x_min + 1; }
  int height() const noexcept { return y_max - y_min + 1; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Click location relative to the image extent. Coordinates are clamped into
/// [0,1] on construction; NaN collapses to 0.
class NormPoint {
 public:
  NormPoint() = default;
  NormPoint(double x, double y);

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }

  friend bool operator==(const NormPoint&, const NormPoint&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

struct PixelPoint {
  int x = 0;
  int y = 0;
  FrameId frame{};

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct ImageRef {
  std::string path;
  // Lowercase hex SHA-256 of the file bytes; empty when the manifest omits it.
  std::string sha256;
  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct ImageMeta {
  int width = 1;
  int height = 1;
  ImageRef image;

  ImageMeta() = default;
  ImageMeta(int w, int h, ImageRef ref = {});

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

struct CropSpec {
  ViewLabel label = ViewLabel::Large;
  BBox rect;  // original-image frame
  // Pre-rendered raster for this view; empty means "cut rect out of the original".
  std::string image_path;

  friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

bool bbox_contains(const BBox& b, const PixelPoint& p);

/// (round-half-up of x*W, y*H), clamped to the last pixel of each axis.
PixelPoint denormalize(const NormPoint& p, const ImageMeta& m, FrameId frame = {});

/// Translates b into the crop's frame. Throws NotInView unless b lies fully
/// inside c.rect; partially covered boxes are rejected as well.
BBox remap_bbox_to_crop(const BBox& b, const CropSpec& c, FrameId view_frame = {});

}  // namespace edabench
