/* Copyright 2026 The XEdge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "xedge/dataset.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "xedge/artifact_io.h"
#include "xedge/error.h"
#include "xedge/random.h"

namespace xedge {

using nlohmann::json;

const ImageInfo* Dataset::FindImage(int64_t id) const {
  for (const auto& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

const Category* Dataset::FindCategory(int64_t id) const {
  for (const auto& cat : categories) {
    if (cat.id == id) return &cat;
  }
  return nullptr;
}

std::optional<int64_t> Dataset::VoidCategoryId() const {
  for (const auto& cat : categories) {
    if (cat.name == kVoidCategoryName) return cat.id;
  }
  return std::nullopt;
}

std::vector<const Annotation*> Dataset::AnnotationsFor(int64_t image_id) const {
  std::vector<const Annotation*> out;
  for (const auto& ann : annotations) {
    if (ann.image_id == image_id) out.push_back(&ann);
  }
  return out;
}

std::vector<Category> Dataset::LabelCategories() const {
  std::vector<Category> out;
  for (const auto& cat : categories) {
    if (cat.name != kVoidCategoryName) out.push_back(cat);
  }
  std::sort(out.begin(), out.end(), [](const Category& a, const Category& b) { return a.id < b.id; });
  return out;
}

std::filesystem::path Dataset::ImagePath(int64_t image_id) const {
  const ImageInfo* info = FindImage(image_id);
  if (!info) Fail(ErrorCode::kNotFound, "unknown image id " + std::to_string(image_id));
  return image_root / info->file_name;
}

void Dataset::Validate() const {
  std::unordered_set<int64_t> image_ids, category_ids, annotation_ids;
  for (const auto& img : images) {
    if (!image_ids.insert(img.id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate image id " + std::to_string(img.id));
    }
    if (img.width <= 0 || img.height <= 0) {
      Fail(ErrorCode::kInvalidArgument,
           "image " + std::to_string(img.id) + " has nonpositive dimensions");
    }
  }
  for (const auto& cat : categories) {
    if (!category_ids.insert(cat.id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate category id " + std::to_string(cat.id));
    }
  }
  const auto void_id = VoidCategoryId();
  for (const auto& ann : annotations) {
    if (!annotation_ids.insert(ann.id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate annotation id " + std::to_string(ann.id));
    }
    if (!image_ids.count(ann.image_id)) {
      Fail(ErrorCode::kNotFound, "annotation " + std::to_string(ann.id) +
                                     " references missing image_id " +
                                     std::to_string(ann.image_id));
    }
    if (!category_ids.count(ann.category_id)) {
      Fail(ErrorCode::kNotFound, "annotation " + std::to_string(ann.id) +
                                     " references missing category_id " +
                                     std::to_string(ann.category_id));
    }
    if (ann.is_void != (void_id && ann.category_id == *void_id)) {
      Fail(ErrorCode::kInvalidArgument,
           "annotation " + std::to_string(ann.id) + " void flag disagrees with its category");
    }
    for (const auto& poly : ann.polygons) {
      if (poly.size() < 3) {
        Fail(ErrorCode::kInvalidArgument, "annotation " + std::to_string(ann.id) +
                                              " has a polygon with fewer than 3 vertices");
      }
      for (const auto& p : poly) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
          Fail(ErrorCode::kInvalidArgument,
               "annotation " + std::to_string(ann.id) + " has a non-finite vertex");
        }
      }
    }
  }
}

namespace {

Polygon ParseFlatPolygon(const json& flat, int64_t ann_id) {
  if (!flat.is_array() || flat.size() % 2 != 0) {
    Fail(ErrorCode::kParse, "annotation " + std::to_string(ann_id) +
                                ": polygon must be a flat array of x,y pairs");
  }
  Polygon poly;
  for (size_t i = 0; i < flat.size(); i += 2) {
    poly.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
  }
  if (poly.size() < 3) {
    Fail(ErrorCode::kInvalidArgument, "annotation " + std::to_string(ann_id) +
                                          ": polygon has " + std::to_string(poly.size()) +
                                          " vertices, need at least 3");
  }
  return poly;
}

}  // namespace

Dataset ParseDataset(std::string_view document, const std::filesystem::path& image_root) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    Fail(ErrorCode::kParse, std::string("malformed dataset JSON: ") + e.what());
  }
  Dataset ds;
  ds.image_root = image_root;
  try {
    for (const char* key : {"images", "categories", "annotations"}) {
      if (!doc.contains(key) || !doc[key].is_array()) {
        Fail(ErrorCode::kParse, std::string("dataset JSON lacks a '") + key + "' array");
      }
    }
    for (const auto& j : doc["images"]) {
      ds.images.push_back({j.at("id").get<int64_t>(), j.at("file_name").get<std::string>(),
                           j.at("width").get<int>(), j.at("height").get<int>()});
    }
    for (const auto& j : doc["categories"]) {
      ds.categories.push_back({j.at("id").get<int64_t>(), j.at("name").get<std::string>()});
    }
    const auto void_id = ds.VoidCategoryId();
    for (const auto& j : doc["annotations"]) {
      Annotation ann;
      ann.id = j.at("id").get<int64_t>();
      ann.image_id = j.at("image_id").get<int64_t>();
      ann.category_id = j.at("category_id").get<int64_t>();
      ann.is_void = void_id && ann.category_id == *void_id;
      const json& seg = j.at("segmentation");
      if (seg.is_object()) {
        Fail(ErrorCode::kUnsupported, "annotation " + std::to_string(ann.id) +
                                          ": RLE segmentations are not supported, use polygons");
      }
      if (!seg.is_array()) {
        Fail(ErrorCode::kParse, "annotation " + std::to_string(ann.id) +
                                    ": segmentation must be a list of polygons");
      }
      for (const auto& flat : seg) ann.polygons.push_back(ParseFlatPolygon(flat, ann.id));
      ds.annotations.push_back(std::move(ann));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("dataset JSON: ") + e.what());
  }
  ds.Validate();
  return ds;
}

Dataset LoadDataset(const std::filesystem::path& json_path) {
  return ParseDataset(ReadFile(json_path), json_path.parent_path());
}

std::string WriteDataset(const Dataset& ds) {
  json images = json::array();
  for (const auto& img : ds.images) {
    images.push_back({{"id", img.id},
                      {"file_name", img.file_name},
                      {"width", img.width},
                      {"height", img.height}});
  }
  json categories = json::array();
  for (const auto& cat : ds.categories) categories.push_back({{"id", cat.id}, {"name", cat.name}});
  json annotations = json::array();
  for (const auto& ann : ds.annotations) {
    json seg = json::array();
    for (const auto& poly : ann.polygons) {
      json flat = json::array();
      for (const auto& p : poly) {
        flat.push_back(p.x);
        flat.push_back(p.y);
      }
      seg.push_back(std::move(flat));
    }
    annotations.push_back({{"id", ann.id},
                           {"image_id", ann.image_id},
                           {"category_id", ann.category_id},
                           {"segmentation", std::move(seg)}});
  }
  // nlohmann::json objects are std::map backed, so keys come out sorted.
  json doc = {{"images", std::move(images)},
              {"categories", std::move(categories)},
              {"annotations", std::move(annotations)}};
  return doc.dump(2) + "\n";
}

std::string DatasetDigest(const Dataset& ds) { return Sha256Hex(WriteDataset(ds)); }

namespace {

const ImageInfo& RequireImage(const Dataset& ds, int64_t image_id) {
  const ImageInfo* info = ds.FindImage(image_id);
  if (!info) Fail(ErrorCode::kNotFound, "unknown image id " + std::to_string(image_id));
  return *info;
}

}  // namespace

BinaryMask BuildCategoryMask(const Dataset& ds, int64_t image_id, int64_t category_id) {
  const ImageInfo& info = RequireImage(ds, image_id);
  if (!ds.FindCategory(category_id)) {
    Fail(ErrorCode::kNotFound, "unknown category id " + std::to_string(category_id));
  }
  BinaryMask mask(info.height, info.width);
  for (const Annotation* ann : ds.AnnotationsFor(image_id)) {
    if (ann->is_void || ann->category_id != category_id) continue;
    mask = MaskUnion(mask, RasterizePolygons(ann->polygons, info.height, info.width));
  }
  return mask;
}

BinaryMask BuildVoidMask(const Dataset& ds, int64_t image_id) {
  const ImageInfo& info = RequireImage(ds, image_id);
  BinaryMask mask(info.height, info.width);
  for (const Annotation* ann : ds.AnnotationsFor(image_id)) {
    if (ann->is_void) mask = MaskUnion(mask, RasterizePolygons(ann->polygons, info.height, info.width));
  }
  return mask;
}

BinaryMask BuildLabeledMask(const Dataset& ds, int64_t image_id) {
  const ImageInfo& info = RequireImage(ds, image_id);
  BinaryMask mask(info.height, info.width);
  for (const Annotation* ann : ds.AnnotationsFor(image_id)) {
    if (!ann->is_void) {
      mask = MaskUnion(mask, RasterizePolygons(ann->polygons, info.height, info.width));
    }
  }
  return mask;
}

Dataset SubsetByImages(const Dataset& ds, const std::vector<int64_t>& image_ids) {
  const std::set<int64_t> keep(image_ids.begin(), image_ids.end());
  Dataset out;
  out.image_root = ds.image_root;
  out.categories = ds.categories;
  for (const auto& img : ds.images) {
    if (keep.count(img.id)) out.images.push_back(img);
  }
  for (const auto& ann : ds.annotations) {
    if (keep.count(ann.image_id)) out.annotations.push_back(ann);
  }
  return out;
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train fraction must lie strictly between 0 and 1");
  }
  if (ds.images.empty()) Fail(ErrorCode::kInvalidArgument, "cannot split an empty dataset");
  std::vector<int64_t> ids;
  for (const auto& img : ds.images) ids.push_back(img.id);
  std::sort(ids.begin(), ids.end());
  Rng rng(spec.seed);
  Shuffle(ids, rng);
  // The small epsilon keeps 0.8 * 10 from rounding up to 9.
  const size_t n_train = static_cast<size_t>(
      std::ceil(spec.train_fraction * static_cast<double>(ids.size()) - 1e-9));
  const std::vector<int64_t> train(ids.begin(), ids.begin() + n_train);
  const std::vector<int64_t> val(ids.begin() + n_train, ids.end());
  return {SubsetByImages(ds, train), SubsetByImages(ds, val)};
}

int64_t EnsureVoidCategory(Dataset& ds) {
  if (auto id = ds.VoidCategoryId()) return *id;
  int64_t max_id = 0;
  for (const auto& cat : ds.categories) max_id = std::max(max_id, cat.id);
  ds.categories.push_back({max_id + 1, std::string(kVoidCategoryName)});
  return max_id + 1;
}

int64_t NextAnnotationId(const Dataset& ds) {
  int64_t max_id = 0;
  for (const auto& ann : ds.annotations) max_id = std::max(max_id, ann.id);
  return max_id + 1;
}

}  // namespace xedge
