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
#ifndef XEDGE_METRICS_H_
#define XEDGE_METRICS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xedge/imaging.h"
#include "xedge/model.h"

namespace xedge {

// Plausibility of a saliency map against ground truth, each in [0, 1].
struct PlausibilityScores {
  double ebpg = 0.0;
  double iou = 0.0;
  double bbox = 0.0;
};

// Saliency is min-max normalized first. IoU and Bbox binarize it to its
// top-|GT| pixels. Throws on an empty GT or a zero-energy saliency map.
PlausibilityScores PlausibilityMetrics(const SaliencyMap& sal, const BinaryMask& gt);

enum class CurveKind { kDeletion, kInsertion };

struct FaithfulnessCurve {
  CurveKind kind = CurveKind::kDeletion;
  std::vector<double> xs;
  std::vector<double> hs;
  double auc = 0.0;
};

enum class TargetRegionPolicy {
  // Region = argmax pixels of the category on the unperturbed image.
  kFrozenArgmax,
  // Score = mean class probability over the whole image.
  kWholeImage,
};

struct FaithfulnessConfig {
  // 0 selects ceil(H*W / 100).
  int64_t pixels_per_step = 0;
  // 0 selects ceil(H*W / pixels_per_step), i.e. full coverage.
  int64_t steps = 0;
  double blur_sigma = 5.0;
  TargetRegionPolicy region = TargetRegionPolicy::kFrozenArgmax;

  // Resolved (pixels_per_step, steps) for an image with `pixels` pixels.
  std::pair<int64_t, int64_t> Resolve(int64_t pixels) const;
};

// Trapezoid rule over (xs, hs).
double TrapezoidAuc(const std::vector<double>& xs, const std::vector<double>& hs);

// Deletion zeroes the next N most salient pixels (all channels) per step;
// insertion starts from Blur(I) and restores them. Points are (i/n, h_i)
// for i = 0..n; the last step covers any remainder. Ties in saliency are
// broken row-major.
std::pair<FaithfulnessCurve, FaithfulnessCurve> FaithfulnessCurves(
    const ClassScorer& scorer, const ImageTensor& img, const SaliencyMap& sal,
    const FaithfulnessConfig& cfg);
std::pair<FaithfulnessCurve, FaithfulnessCurve> FaithfulnessCurves(
    const SegmentationModel& model, const ImageTensor& img, const SaliencyMap& sal,
    int class_index, const FaithfulnessConfig& cfg);

// CSV "x,h" with a header line.
std::string CurveCsv(const FaithfulnessCurve& curve);

// 1 - 2|P n G| / (|P| + |G|); 0 when both are empty.
double DiceLoss(const BinaryMask& pred, const BinaryMask& gt);

struct SegmentationIouResult {
  // Percent per included class.
  std::map<int32_t, double> per_class;
  double miou = 0.0;
};

// Per-class IoU over label maps. Pixels whose ground-truth label is
// `void_label` are ignored in both maps; classes absent from both maps are
// left out of the mean.
SegmentationIouResult SegmentationIou(const std::vector<int32_t>& pred,
                                      const std::vector<int32_t>& gt,
                                      const std::vector<int32_t>& categories,
                                      std::optional<int32_t> void_label = std::nullopt);

}  // namespace xedge

#endif  // XEDGE_METRICS_H_
