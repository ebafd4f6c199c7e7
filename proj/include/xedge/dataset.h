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
#ifndef XEDGE_DATASET_H_
#define XEDGE_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xedge/imaging.h"

namespace xedge {

// Reserved category for look-alike objects that must stay unlabeled. It is
// excluded from ground-truth masks, losses and metrics.
inline constexpr std::string_view kVoidCategoryName = "void";

struct ImageInfo {
  int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
  bool operator==(const ImageInfo&) const = default;
};

struct Category {
  int64_t id = 0;
  std::string name;
  bool operator==(const Category&) const = default;
};

struct Annotation {
  int64_t id = 0;
  int64_t image_id = 0;
  int64_t category_id = 0;
  std::vector<Polygon> polygons;
  bool is_void = false;
  bool operator==(const Annotation&) const = default;
};

// COCO-style polygon dataset. Values are treated as immutable once built;
// transformations return new datasets.
struct Dataset {
  std::vector<ImageInfo> images;
  std::vector<Category> categories;
  std::vector<Annotation> annotations;
  std::filesystem::path image_root;

  const ImageInfo* FindImage(int64_t id) const;
  const Category* FindCategory(int64_t id) const;
  std::optional<int64_t> VoidCategoryId() const;
  std::vector<const Annotation*> AnnotationsFor(int64_t image_id) const;
  // Categories excluding the void category, ordered by id.
  std::vector<Category> LabelCategories() const;
  std::filesystem::path ImagePath(int64_t image_id) const;

  // Throws when a reference dangles, a polygon is degenerate or an image
  // has a nonpositive size.
  void Validate() const;

  // Structural equality ignores image_root.
  bool operator==(const Dataset& other) const {
    return images == other.images && categories == other.categories &&
           annotations == other.annotations;
  }
};

struct SplitSpec {
  double train_fraction = 0.8;
  uint64_t seed = 42;
};

Dataset ParseDataset(std::string_view document, const std::filesystem::path& image_root = {});
Dataset LoadDataset(const std::filesystem::path& json_path);
// Canonical document: sorted keys, two-space indent, trailing newline.
std::string WriteDataset(const Dataset& ds);
std::string DatasetDigest(const Dataset& ds);

// Union of the category's non-void polygons on the image.
BinaryMask BuildCategoryMask(const Dataset& ds, int64_t image_id, int64_t category_id);
BinaryMask BuildVoidMask(const Dataset& ds, int64_t image_id);
// Union of every non-void annotation on the image.
BinaryMask BuildLabeledMask(const Dataset& ds, int64_t image_id);

// Seeded shuffle of image ids; the first ceil(f * n) go to training.
std::pair<Dataset, Dataset> SplitDataset(const Dataset& ds, const SplitSpec& spec);
Dataset SubsetByImages(const Dataset& ds, const std::vector<int64_t>& image_ids);

// Returns the void category id, adding the category (with the highest id)
// when missing.
int64_t EnsureVoidCategory(Dataset& ds);
int64_t NextAnnotationId(const Dataset& ds);

}  // namespace xedge

#endif  // XEDGE_DATASET_H_
