#include "edabench/ingestion.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace edabench {

using nlohmann::json;

namespace {

class RecordError : public Error {
 public:
  RecordError(ErrorCode code, std::string id, const std::string& what)
      : Error(code, what), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

BBox box_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 4 ||
      !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number_integer(); })) {
    throw Error(ErrorCode::InvalidRecord, fmt::format("'{}' must be [x_min,y_min,x_max,y_max] integers", key));
  }
  const int x0 = j[0].get<int>(), y0 = j[1].get<int>(), x1 = j[2].get<int>(), y1 = j[3].get<int>();
  if (x0 < 0 || y0 < 0 || x1 < x0 || y1 < y0) {
    throw Error(ErrorCode::BoundsError, fmt::format("'{}' ({},{},{},{}) is malformed", key, x0, y0, x1, y1));
  }
  return BBox(x0, y0, x1, y1);
}

json box_to_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

template <typename T>
T require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::InvalidRecord, fmt::format("missing key '{}'", key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidRecord, fmt::format("key '{}' has the wrong type", key));
  }
}

bool inside_image(const BBox& b, const ImageMeta& m) { return b.x_max < m.width && b.y_max < m.height; }

void check_sample(const Sample& s) {
  if (s.id.empty()) throw Error(ErrorCode::InvalidRecord, "empty id");
  if (s.question.empty()) throw Error(ErrorCode::InvalidRecord, "empty question");
  if (s.gt_answer.empty()) throw Error(ErrorCode::InvalidRecord, "empty gt_answer");
  if (!inside_image(s.gt_bbox, s.image)) {
    throw Error(ErrorCode::BoundsError,
                fmt::format("gt_bbox ({},{},{},{}) exceeds {}x{} image", s.gt_bbox.x_min, s.gt_bbox.y_min,
                            s.gt_bbox.x_max, s.gt_bbox.y_max, s.image.width, s.image.height));
  }
  std::set<ViewLabel> seen;
  for (const auto& c : s.crops) {
    if (!seen.insert(c.label).second) {
      throw Error(ErrorCode::InvalidRecord, fmt::format("duplicate {} crop", to_string(c.label)));
    }
    if (!inside_image(c.rect, s.image)) {
      throw Error(ErrorCode::BoundsError, fmt::format("{} crop exceeds the image", to_string(c.label)));
    }
  }
  const auto* large = s.crop(ViewLabel::Large);
  if (large == nullptr) throw Error(ErrorCode::InvalidRecord, "no Large crop");
  if (large->rect != BBox(0, 0, s.image.width - 1, s.image.height - 1)) {
    throw Error(ErrorCode::InvalidRecord, "Large crop must cover the full image");
  }
}

}  // namespace

const CropSpec* Sample::crop(ViewLabel label) const {
  auto it = std::find_if(crops.begin(), crops.end(), [&](const CropSpec& c) { return c.label == label; });
  return it == crops.end() ? nullptr : &*it;
}

const Sample& Dataset::find(std::string_view id) const {
  auto it = std::find_if(samples.begin(), samples.end(), [&](const Sample& s) { return s.id == id; });
  if (it == samples.end()) throw Error(ErrorCode::InvalidRecord, fmt::format("no sample '{}'", id));
  return *it;
}

Sample sample_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "record is not an object");
  Sample s;
  s.id = require<std::string>(j, "id");
  try {
    ImageRef ref{require<std::string>(j, "image_path"), j.value("image_sha256", std::string{})};
    const int w = require<int>(j, "width");
    const int h = require<int>(j, "height");
    if (w < 1 || h < 1) throw Error(ErrorCode::BoundsError, fmt::format("image size {}x{}", w, h));
    s.image = ImageMeta(w, h, std::move(ref));
    s.question = require<std::string>(j, "question");
    s.gt_answer = require<std::string>(j, "gt_answer");
    if (!j.contains("gt_bbox")) throw Error(ErrorCode::InvalidRecord, "missing key 'gt_bbox'");
    s.gt_bbox = box_from_json(j.at("gt_bbox"), "gt_bbox");
    const auto field = parse_field(require<std::string>(j, "field"));
    const auto software = parse_software(require<std::string>(j, "software"));
    s.combo = ComboTag(software, field);
    s.difficulty = parse_difficulty(require<std::string>(j, "difficulty"));
    const auto crops = require<json>(j, "crops");
    if (!crops.is_array()) throw Error(ErrorCode::InvalidRecord, "'crops' must be an array");
    for (const auto& c : crops) {
      CropSpec spec;
      spec.label = parse_view(require<std::string>(c, "label"));
      if (!c.contains("rect")) throw Error(ErrorCode::InvalidRecord, "crop without 'rect'");
      spec.rect = box_from_json(c.at("rect"), "rect");
      spec.image_path = c.value("image_path", std::string{});
      s.crops.push_back(std::move(spec));
    }
    check_sample(s);
  } catch (const RecordError&) {
    throw;
  } catch (const Error& e) {
    throw RecordError(e.code(), s.id, e.what());
  }
  return s;
}

json sample_to_json(const Sample& s) {
  json j;
  j["id"] = s.id;
  j["image_path"] = s.image.image.path;
  if (!s.image.image.sha256.empty()) j["image_sha256"] = s.image.image.sha256;
  j["width"] = s.image.width;
  j["height"] = s.image.height;
  j["question"] = s.question;
  j["gt_answer"] = s.gt_answer;
  j["gt_bbox"] = box_to_json(s.gt_bbox);
  j["field"] = to_string(s.combo.field());
  j["software"] = to_string(s.combo.software());
  j["difficulty"] = to_string(s.difficulty);
  json crops = json::array();
  for (const auto& c : s.crops) {
    json cj{{"label", to_string(c.label)}, {"rect", box_to_json(c.rect)}};
    if (!c.image_path.empty()) cj["image_path"] = c.image_path;
    crops.push_back(std::move(cj));
  }
  j["crops"] = std::move(crops);
  return j;
}

std::string manifest_line(const Sample& s) { return sample_to_json(s).dump(); }

ValidationReport validate_manifest(const std::filesystem::path& path, bool check_images) {
  const auto bytes = read_file_bytes(path);
  ValidationReport report;
  report.manifest_hash = sha256_hex(bytes);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream in(text);
  std::set<std::string> ids;
  std::string line;
  const auto root = path.parent_path();
  while (std::getline(in, line)) {
    ++report.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Violation v;
    v.line = report.lines;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
      }
      Sample s = sample_from_json(j);
      if (!ids.insert(s.id).second) {
        throw RecordError(ErrorCode::DuplicateId, s.id, fmt::format("duplicate id '{}'", s.id));
      }
      if (check_images) {
        try {
          const auto raw = read_file_bytes(root / s.image.image.path);
          if (!s.image.image.sha256.empty() && sha256_hex(raw) != s.image.image.sha256) {
            throw Error(ErrorCode::ImageError, "image digest mismatch");
          }
          const auto img = decode_png(raw);
          if (img.width() != s.image.width || img.height() != s.image.height) {
            throw Error(ErrorCode::BoundsError,
                        fmt::format("image is {}x{}, record says {}x{}", img.width(), img.height(),
                                    s.image.width, s.image.height));
          }
        } catch (const Error& e) {
          throw RecordError(e.code(), s.id, e.what());
        }
      }
      report.valid.push_back(std::move(s));
      continue;
    } catch (const RecordError& e) {
      v.sample_id = e.id();
      v.code = e.code();
      v.message = e.what();
    } catch (const Error& e) {
      v.code = e.code();
      v.message = e.what();
    }
    report.violations.push_back(std::move(v));
  }
  return report;
}

Dataset load_manifest(const std::filesystem::path& path) {
  auto report = validate_manifest(path, false);
  if (!report.clean()) {
    const auto& v = report.violations.front();
    throw Error(v.code, fmt::format("{}:{}: {}", path.string(), v.line, v.message));
  }
  return Dataset{std::move(report.valid), std::move(report.manifest_hash), path.parent_path()};
}

void save_manifest(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  for (const auto& s : d.samples) out << manifest_line(s) << '\n';
}

SampleView derive_view(const Sample& s, ViewLabel label) {
  const auto* c = s.crop(label);
  if (c == nullptr) {
    throw Error(ErrorCode::MissingView, fmt::format("sample '{}' has no {} crop", s.id, to_string(label)));
  }
  SampleView v;
  v.sample_id = s.id;
  v.label = label;
  v.crop = *c;
  v.view_meta = ImageMeta(c->rect.width(), c->rect.height(),
                          ImageRef{c->image_path.empty() ? s.image.image.path : c->image_path,
                                   c->image_path.empty() ? s.image.image.sha256 : std::string{}});
  v.view_bbox = remap_bbox_to_crop(s.gt_bbox, *c, v.frame());
  return v;
}

Raster load_view_raster(const Dataset& d, const Sample& s, ViewLabel label) {
  const auto* c = s.crop(label);
  if (c == nullptr) {
    throw Error(ErrorCode::MissingView, fmt::format("sample '{}' has no {} crop", s.id, to_string(label)));
  }
  if (!c->image_path.empty()) {
    auto img = load_png(d.root / c->image_path);
    if (img.width() != c->rect.width() || img.height() != c->rect.height()) {
      throw Error(ErrorCode::BoundsError,
                  fmt::format("pre-rendered {} view of '{}' does not match its rect", to_string(label), s.id));
    }
    return img;
  }
  const auto raw = read_file_bytes(d.root / s.image.image.path);
  if (!s.image.image.sha256.empty() && sha256_hex(raw) != s.image.image.sha256) {
    throw Error(ErrorCode::ImageError, fmt::format("digest mismatch for '{}'", s.image.image.path));
  }
  auto img = decode_png(raw);
  if (img.width() != s.image.width || img.height() != s.image.height) {
    throw Error(ErrorCode::BoundsError, fmt::format("image of '{}' has unexpected size", s.id));
  }
  if (label == ViewLabel::Large) return img;
  return img.crop(c->rect);
}

std::vector<std::string> shuffled_order(const Dataset& d, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(d.samples.size());
  for (const auto& s : d.samples) ids.push_back(s.id);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  return ids;
}

}  // namespace edabench
