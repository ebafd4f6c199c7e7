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
#ifndef XEDGE_AUGMENT_H_
#define XEDGE_AUGMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "xedge/dataset.h"
#include "xedge/imaging.h"

namespace xedge {

inline constexpr int kDefaultThinThreshold = 10;

// Dilates the masks of thin annotations (min bounding-box side at most
// `thin_threshold`) of the given categories by `radius` and re-derives
// their polygons. `image_ids`, when set, limits the edit to those images.
Dataset EnlargeAnnotations(const Dataset& ds, const std::vector<int64_t>& category_ids,
                           int radius, int thin_threshold = kDefaultThinThreshold,
                           const std::optional<std::set<int64_t>>& image_ids = std::nullopt);

// Adds a void annotation covering `polygons` minus every labeled pixel.
Dataset AddVoidAnnotation(const Dataset& ds, int64_t image_id,
                          const std::vector<Polygon>& polygons);

// ---------------------------------------------------------------------------
// Image augmentation pipeline.

struct TransformSpec {
  std::string name;
  double probability = 1.0;
  nlohmann::json params = nlohmann::json::object();
};

struct AugmentationPlan {
  std::vector<TransformSpec> transforms;
  uint64_t seed = 42;
  // Image resampling for geometric transforms: "bilinear" or "nearest".
  // Masks always use nearest.
  std::string image_interpolation = "bilinear";

  void Validate() const;
};

AugmentationPlan ParseAugmentationPlan(std::string_view document);
std::string WriteAugmentationPlan(const AugmentationPlan& plan);

bool IsGeometricTransform(std::string_view name);
const std::vector<std::string>& KnownTransforms();

using MaskSet = std::map<int64_t, BinaryMask>;

struct AugmentedSample {
  ImageTensor image;
  MaskSet masks;
  std::vector<std::string> applied;
};

// Runs the plan on one sample with seed plan.seed ^ sample_id. Geometric
// transforms move image and masks through the same coordinate map;
// photometric transforms leave masks untouched.
AugmentedSample ApplyAugmentationPipeline(const ImageTensor& img, const MaskSet& masks,
                                          const AugmentationPlan& plan, int64_t sample_id = 0);

// Augments every image of a dataset, writing PNGs under out_dir/images and
// returning the matching dataset (one annotation per category and image).
Dataset AugmentDatasetImages(
    const Dataset& ds, const AugmentationPlan& plan, const std::filesystem::path& out_dir,
    const std::function<ImageTensor(const Dataset&, const ImageInfo&)>& loader, int jobs = 1);

}  // namespace xedge

#endif  // XEDGE_AUGMENT_H_
