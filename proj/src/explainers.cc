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
#include "xedge/explainers.h"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "xedge/artifact_io.h"
#include "xedge/error.h"
#include "xedge/parallel.h"
#include "xedge/random.h"

namespace xedge {

void RiseConfig::Validate() const {
  Require(grid >= 1, "RISE grid must be >= 1");
  Require(height >= 1 && width >= 1, "RISE mask size must be positive");
  Require(batch >= 1, "RISE batch must be >= 1");
  if (mode == RiseMode::kExhaustive) {
    if (grid * grid > 16) {
      Fail(ErrorCode::kInvalidArgument,
           "exhaustive RISE enumerates 2^(s*s) grids and needs s*s <= 16, got s=" +
               std::to_string(grid));
    }
  } else {
    Require(n_masks >= 1, "RISE needs at least one mask");
    Require(keep_prob > 0.0 && keep_prob <= 1.0, "RISE keep probability must lie in (0, 1]");
  }
}

int64_t RiseConfig::MaskCount() const {
  return mode == RiseMode::kExhaustive ? (int64_t{1} << (grid * grid)) : n_masks;
}

double RiseConfig::ExpectedMaskValue() const {
  // Under enumeration every cell is kept in exactly half of the grids.
  return mode == RiseMode::kExhaustive ? 0.5 : keep_prob;
}

std::string RiseConfig::Digest() const {
  nlohmann::json j = {{"method", "rise"},
                      {"mode", mode == RiseMode::kExhaustive ? "exhaustive" : "monte_carlo"},
                      {"grid", grid},
                      {"height", height},
                      {"width", width}};
  if (mode == RiseMode::kMonteCarlo) {
    j["n_masks"] = n_masks;
    j["keep_prob"] = keep_prob;
    j["seed"] = seed;
    j["smooth"] = smooth;
  }
  return Sha256Hex(j.dump());
}

std::vector<float> GenerateRiseMask(const RiseConfig& cfg, int64_t index) {
  const int s = cfg.grid;
  const int h = cfg.height;
  const int w = cfg.width;
  std::vector<float> mask(static_cast<size_t>(h) * w);
  auto nearest = [&](auto cell_kept) {
    for (int r = 0; r < h; ++r) {
      const int gr = static_cast<int>(static_cast<int64_t>(r) * s / h);
      for (int c = 0; c < w; ++c) {
        const int gc = static_cast<int>(static_cast<int64_t>(c) * s / w);
        mask[static_cast<size_t>(r) * w + c] = cell_kept(gr * s + gc) ? 1.0f : 0.0f;
      }
    }
  };
  if (cfg.mode == RiseMode::kExhaustive) {
    Require(index >= 0 && index < cfg.MaskCount(), "mask index out of range");
    nearest([&](int bit) { return ((index >> bit) & 1) != 0; });
    return mask;
  }
  Rng rng = Rng::ForStream(cfg.seed, static_cast<uint64_t>(index));
  std::vector<float> grid(static_cast<size_t>(s) * s);
  for (float& g : grid) g = rng.Bernoulli(cfg.keep_prob) ? 1.0f : 0.0f;
  if (!cfg.smooth) {
    nearest([&](int cell) { return grid[cell] > 0.5f; });
    return mask;
  }
  const int cell_h = (h + s - 1) / s;
  const int cell_w = (w + s - 1) / s;
  const int dy = static_cast<int>(rng.UniformInt(cell_h));
  const int dx = static_cast<int>(rng.UniformInt(cell_w));
  const int up_h = (s + 1) * cell_h;
  const int up_w = (s + 1) * cell_w;
  const auto up = ResizePlaneBilinear(grid, s, s, up_h, up_w);
  for (int r = 0; r < h; ++r) {
    std::copy_n(up.begin() + static_cast<size_t>(r + dy) * up_w + dx, w,
                mask.begin() + static_cast<size_t>(r) * w);
  }
  return mask;
}

std::vector<std::vector<float>> GenerateRiseMasks(const RiseConfig& cfg) {
  cfg.Validate();
  const int64_t n = cfg.MaskCount();
  std::vector<std::vector<float>> masks(n);
  ParallelFor(n, cfg.jobs, [&](int64_t i) { masks[i] = GenerateRiseMask(cfg, i); });
  return masks;
}

ImageTensor ApplyMask(const ImageTensor& img, const std::vector<float>& mask) {
  Require(mask.size() == static_cast<size_t>(img.plane_size()), "mask size differs from image");
  ImageTensor out = img;
  for (int c = 0; c < img.channels(); ++c) {
    auto plane = out.plane(c);
    for (size_t i = 0; i < plane.size(); ++i) plane[i] *= mask[i];
  }
  return out;
}

ExplainResult ExplainRise(const ClassScorer& scorer, const ImageTensor& img, int category,
                          const RiseConfig& cfg) {
  cfg.Validate();
  if (cfg.height != img.height() || cfg.width != img.width()) {
    Fail(ErrorCode::kInvalidArgument, "RISE mask size differs from the image size");
  }
  const double expected = cfg.ExpectedMaskValue();
  if (!(expected > 0.0)) Fail(ErrorCode::kInvalidArgument, "RISE expected mask value is zero");

  const int64_t total = cfg.MaskCount();
  const size_t pixels = static_cast<size_t>(img.plane_size());
  const int forward_jobs =
      scorer.model().concurrency() == Concurrency::kConcurrentSafe ? cfg.jobs : 1;
  std::vector<double> acc(pixels, 0.0);

  for (int64_t start = 0; start < total; start += cfg.batch) {
    const int64_t count = std::min<int64_t>(cfg.batch, total - start);
    std::vector<std::vector<float>> masks(count);
    std::vector<double> scores(count);
    ParallelFor(count, cfg.jobs, [&](int64_t i) { masks[i] = GenerateRiseMask(cfg, start + i); });
    ParallelFor(count, forward_jobs,
                [&](int64_t i) { scores[i] = scorer.Score(ApplyMask(img, masks[i])); });
    // Pixel-parallel, mask-ordered accumulation.
    const int64_t stripes = std::min<int64_t>(ResolveJobs(cfg.jobs), static_cast<int64_t>(pixels));
    const size_t stripe = (pixels + stripes - 1) / stripes;
    ParallelFor(stripes, cfg.jobs, [&](int64_t t) {
      const size_t begin = t * stripe;
      const size_t end = std::min(pixels, begin + stripe);
      for (int64_t i = 0; i < count; ++i) {
        const double f = scores[i];
        const float* m = masks[i].data();
        for (size_t p = begin; p < end; ++p) acc[p] += f * m[p];
      }
    });
  }

  std::vector<float> values(pixels);
  const double norm = expected * static_cast<double>(total);
  for (size_t p = 0; p < pixels; ++p) values[p] = static_cast<float>(acc[p] / norm);
  ExplainResult result{SaliencyMap(category, img.height(), img.width(), std::move(values)), "rise",
                       cfg.Digest(), scorer.model().descriptor(), cfg.seed};
  return result;
}

ExplainResult ExplainRise(const SegmentationModel& model, const ImageTensor& img, int category,
                          int class_index, const RiseConfig& cfg) {
  return ExplainRise(ClassScorer::FrozenOn(model, img, class_index), img, category, cfg);
}

std::vector<float> GradCamFromRecord(const IntrospectionRecord& rec) {
  const size_t plane = static_cast<size_t>(rec.height) * rec.width;
  Require(rec.activations.size() == rec.channels * plane && rec.grads.size() == rec.channels * plane,
          "introspection record shape mismatch");
  std::vector<double> cam(plane, 0.0);
  for (int k = 0; k < rec.channels; ++k) {
    double alpha = 0.0;
    for (size_t i = 0; i < plane; ++i) alpha += rec.grads[k * plane + i];
    alpha /= static_cast<double>(plane);
    for (size_t i = 0; i < plane; ++i) cam[i] += alpha * rec.activations[k * plane + i];
  }
  std::vector<float> out(plane);
  for (size_t i = 0; i < plane; ++i) out[i] = static_cast<float>(std::max(0.0, cam[i]));
  return out;
}

ExplainResult ExplainGradCam(const SegmentationModel& model, const ImageTensor& img,
                             int category, int class_index) {
  if (!model.SupportsIntrospection()) {
    Fail(ErrorCode::kUnsupported,
         "GradCAM needs introspection, which model '" + model.descriptor().model_id +
             "' does not support");
  }
  const BinaryMask region = ArgmaxRegion(PredictScores(model, img), class_index);
  const auto [out, rec] = model.IntrospectForward(img, class_index, region);
  auto cam = GradCamFromRecord(rec);
  if (rec.height != img.height() || rec.width != img.width()) {
    cam = ResizePlaneBilinear(cam, rec.height, rec.width, img.height(), img.width());
  }
  const SaliencyMap raw(category, img.height(), img.width(), std::move(cam));
  return ExplainResult{MinMaxNormalize(raw), "gradcam",
                       Sha256Hex(R"({"method":"gradcam"})"), model.descriptor(), 0};
}

}  // namespace xedge
