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
#include "xedge/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "xedge/error.h"

namespace xedge {

PlausibilityScores PlausibilityMetrics(const SaliencyMap& sal, const BinaryMask& gt) {
  Require(gt.height == sal.height && gt.width == sal.width,
          "saliency and ground-truth dimensions differ");
  const int64_t gt_count = gt.Count();
  if (gt_count == 0) Fail(ErrorCode::kInvalidArgument, "ground-truth mask is empty");
  const SaliencyMap norm = MinMaxNormalize(sal);

  double inside = 0.0;
  double total = 0.0;
  for (size_t i = 0; i < norm.values.size(); ++i) {
    total += norm.values[i];
    if (gt.bits[i]) inside += norm.values[i];
  }
  if (!(total > 0.0)) Fail(ErrorCode::kInvalidArgument, "saliency map has zero energy");

  const BinaryMask top = TopKBinarize(norm, gt_count);
  const int64_t inter = MaskIntersection(top, gt).Count();
  const int64_t uni = MaskUnion(top, gt).Count();

  PlausibilityScores s;
  s.ebpg = inside / total;
  s.iou = static_cast<double>(inter) / static_cast<double>(uni);
  s.bbox = RectIoU(BBoxOfMask(top), BBoxOfMask(gt));
  return s;
}

std::pair<int64_t, int64_t> FaithfulnessConfig::Resolve(int64_t pixels) const {
  Require(pixels_per_step >= 0 && steps >= 0, "faithfulness steps must be nonnegative");
  const int64_t per_step = pixels_per_step > 0 ? pixels_per_step : (pixels + 99) / 100;
  const int64_t n = steps > 0 ? steps : (pixels + per_step - 1) / per_step;
  return {per_step, n};
}

double TrapezoidAuc(const std::vector<double>& xs, const std::vector<double>& hs) {
  Require(xs.size() == hs.size(), "curve xs and hs differ in length");
  double auc = 0.0;
  for (size_t i = 1; i < xs.size(); ++i) auc += (hs[i] + hs[i - 1]) * 0.5 * (xs[i] - xs[i - 1]);
  return auc;
}

std::pair<FaithfulnessCurve, FaithfulnessCurve> FaithfulnessCurves(
    const ClassScorer& scorer, const ImageTensor& img, const SaliencyMap& sal,
    const FaithfulnessConfig& cfg) {
  Require(sal.height == img.height() && sal.width == img.width(),
          "saliency and image dimensions differ");
  const int64_t pixels = img.plane_size();
  const auto [per_step, n] = cfg.Resolve(pixels);
  const auto order = SaliencyOrder(sal.values);

  FaithfulnessCurve del{CurveKind::kDeletion, {}, {}, 0.0};
  FaithfulnessCurve ins{CurveKind::kInsertion, {}, {}, 0.0};

  ImageTensor deleted = img;
  ImageTensor inserted = GaussianBlur(img, cfg.blur_sigma);
  for (int64_t i = 0; i <= n; ++i) {
    if (i > 0) {
      const int64_t begin = std::min(pixels, (i - 1) * per_step);
      const int64_t end = i == n ? pixels : std::min(pixels, i * per_step);
      for (int64_t k = begin; k < end; ++k) {
        const int64_t p = order[k];
        const int r = static_cast<int>(p / img.width());
        const int c = static_cast<int>(p % img.width());
        for (int ch = 0; ch < img.channels(); ++ch) {
          deleted.at(ch, r, c) = 0.0f;
          inserted.at(ch, r, c) = img.at(ch, r, c);
        }
      }
    }
    const double x = static_cast<double>(i) / static_cast<double>(n);
    del.xs.push_back(x);
    ins.xs.push_back(x);
    del.hs.push_back(scorer.Score(deleted));
    ins.hs.push_back(scorer.Score(inserted));
  }
  del.auc = TrapezoidAuc(del.xs, del.hs);
  ins.auc = TrapezoidAuc(ins.xs, ins.hs);
  return {std::move(del), std::move(ins)};
}

std::pair<FaithfulnessCurve, FaithfulnessCurve> FaithfulnessCurves(
    const SegmentationModel& model, const ImageTensor& img, const SaliencyMap& sal,
    int class_index, const FaithfulnessConfig& cfg) {
  const ClassScorer scorer = cfg.region == TargetRegionPolicy::kWholeImage
                                 ? ClassScorer::WholeImage(model, class_index)
                                 : ClassScorer::FrozenOn(model, img, class_index);
  return FaithfulnessCurves(scorer, img, sal, cfg);
}

std::string CurveCsv(const FaithfulnessCurve& curve) {
  std::string out = "x,h\n";
  char line[64];
  for (size_t i = 0; i < curve.xs.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f,%.9g\n", curve.xs[i], curve.hs[i]);
    out += line;
  }
  return out;
}

double DiceLoss(const BinaryMask& pred, const BinaryMask& gt) {
  Require(pred.SameShape(gt), "dice masks differ in shape");
  const int64_t p = pred.Count();
  const int64_t g = gt.Count();
  if (p + g == 0) return 0.0;
  const int64_t inter = MaskIntersection(pred, gt).Count();
  return 1.0 - 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

SegmentationIouResult SegmentationIou(const std::vector<int32_t>& pred,
                                      const std::vector<int32_t>& gt,
                                      const std::vector<int32_t>& categories,
                                      std::optional<int32_t> void_label) {
  Require(pred.size() == gt.size(), "label maps differ in size");
  const std::set<int32_t> classes(categories.begin(), categories.end());
  std::map<int32_t, int64_t> inter, uni;
  for (size_t i = 0; i < gt.size(); ++i) {
    if (void_label && (gt[i] == *void_label || pred[i] == *void_label)) continue;
    const int32_t p = pred[i];
    const int32_t g = gt[i];
    if (p == g) {
      if (classes.count(p)) {
        ++inter[p];
        ++uni[p];
      }
    } else {
      if (classes.count(p)) ++uni[p];
      if (classes.count(g)) ++uni[g];
    }
  }
  SegmentationIouResult result;
  double sum = 0.0;
  for (int32_t c : classes) {
    const int64_t u = uni.count(c) ? uni[c] : 0;
    if (u == 0) continue;
    const double iou = 100.0 * static_cast<double>(inter[c]) / static_cast<double>(u);
    result.per_class[c] = iou;
    sum += iou;
  }
  if (result.per_class.empty()) {
    Fail(ErrorCode::kInvalidArgument, "no category occurs in either label map");
  }
  result.miou = sum / static_cast<double>(result.per_class.size());
  return result;
}

}  // namespace xedge
