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
#ifndef XEDGE_EXPLAINERS_H_
#define XEDGE_EXPLAINERS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "xedge/imaging.h"
#include "xedge/model.h"

namespace xedge {

enum class RiseMode {
  // s x s Bernoulli(p) grids, bilinearly upsampled, randomly shifted.
  kMonteCarlo,
  // Every binary s x s grid, nearest-upsampled, unshifted; s*s <= 16.
  kExhaustive,
};

struct RiseConfig {
  int n_masks = 4000;
  int grid = 7;
  double keep_prob = 0.5;
  // Mask size; must equal the image size when explaining.
  int height = 0;
  int width = 0;
  uint64_t seed = 42;
  RiseMode mode = RiseMode::kMonteCarlo;
  // Monte Carlo only: false draws nearest-upsampled, unshifted grids, i.e.
  // samples of the exhaustive family.
  bool smooth = true;
  // Execution only; never changes results.
  int jobs = 1;
  int batch = 32;

  void Validate() const;
  int64_t MaskCount() const;
  // Mean mask value used to normalize the saliency estimate.
  double ExpectedMaskValue() const;
  // SHA-256 over the result-affecting fields.
  std::string Digest() const;
};

// Mask `index` of the configured family, row-major H*W values in [0, 1].
// Monte Carlo masks derive from (seed, index) only.
std::vector<float> GenerateRiseMask(const RiseConfig& cfg, int64_t index);
std::vector<std::vector<float>> GenerateRiseMasks(const RiseConfig& cfg);

struct ExplainResult {
  SaliencyMap saliency;
  std::string method;
  std::string config_digest;
  ModelDescriptor model;
  uint64_t seed = 0;
};

// Element-wise I * M across channels.
ImageTensor ApplyMask(const ImageTensor& img, const std::vector<float>& mask);

// Raw RISE estimate S(p) = sum_i f(I * M_i) M_i(p) / (E[M] N), reduced in
// mask-index order so the result does not depend on cfg.jobs.
ExplainResult ExplainRise(const ClassScorer& scorer, const ImageTensor& img, int category,
                          const RiseConfig& cfg);
// Uses the target region frozen from the unmasked prediction.
ExplainResult ExplainRise(const SegmentationModel& model, const ImageTensor& img, int category,
                          int class_index, const RiseConfig& cfg);

// ReLU(sum_k mean(grad_k) A_k), upsampled to the image and min-max
// normalized. Needs a model that supports introspection.
ExplainResult ExplainGradCam(const SegmentationModel& model, const ImageTensor& img,
                             int category, int class_index);

// GradCAM map from an introspection record, before upsampling.
std::vector<float> GradCamFromRecord(const IntrospectionRecord& rec);

}  // namespace xedge

#endif  // XEDGE_EXPLAINERS_H_
