#pragma once

#include <cstdint>
#include <filesystem>
#include "json.hpp"
#include <optional>
#include <string>
#include <vector>

#include "edabench/core.hpp"
#include "edabench/raster.hpp"

namespace edabench {

struct Sample {
  std::string id;
  ImageMeta image;
  std::string question;
  std::string gt_answer;
  BBox gt_bbox;  // original frame
  ComboTag combo{SoftwareTag::COMSOL, FieldTag::Acoustic};
  DifficultyTag difficulty = DifficultyTag::Normal;
  std::vector<CropSpec> crops;

  const CropSpec* crop(ViewLabel label) const;
  bool has_view(ViewLabel label) const { return crop(label) != nullptr; }

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SampleView {
  std::string sample_id;
  ViewLabel label = ViewLabel::Large;
  ImageMeta view_meta;
  BBox view_bbox;  // view frame
  CropSpec crop;   // where the view sits in the original image

  FrameId frame() const { return make_frame(sample_id, label); }
};

struct Dataset {
  std::vector<Sample> samples;
  std::string manifest_hash;   // sha256 of the manifest bytes
  std::filesystem::path root;  // image paths resolve against this

  const Sample& find(std::string_view id) const;
};

/// One rejected manifest line.
struct Violation {
  std::size_t line = 0;  // 1-based
  std::string sample_id;  // empty when the line did not parse far enough
  ErrorCode code = ErrorCode::InvalidRecord;
  std::string message;
};

struct ValidationReport {
  std::size_t lines = 0;
  std::vector<Sample> valid;
  std::vector<Violation> violations;
  std::string manifest_hash;

  bool clean() const { return violations.empty(); }
};

/// Parses and checks every record, collecting all violations. When
/// check_images is set, each referenced raster is also decoded and its size
/// compared against the record.
ValidationReport validate_manifest(const std::filesystem::path& path, bool check_images = false);

/// Strict loader: the first violation is thrown as an Error whose message
/// carries the line number.
Dataset load_manifest(const std::filesystem::path& path);

nlohmann::json sample_to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);
std::string manifest_line(const Sample& s);
void save_manifest(const Dataset& d, const std::filesystem::path& path);

/// Geometry of one resolution view. Throws MissingView when the sample has no
/// crop for label and NotInView when the GT box does not survive the crop.
SampleView derive_view(const Sample& s, ViewLabel label);

/// Pixels for a view: the crop's own raster when pre-rendered, else the
/// matching sub-rectangle of the original image. Large returns the original.
Raster load_view_raster(const Dataset& d, const Sample& s, ViewLabel label);

/// Deterministic permutation of sample ids for a seed.
std::vector<std::string> shuffled_order(const Dataset& d, std::uint64_t seed);

}  // namespace edabench
