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
#ifndef XEDGE_MODEL_H_
#define XEDGE_MODEL_H_

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xedge/imaging.h"

namespace xedge {

// Lifecycle stage of a segmentation model: the finetuned base model, the
// model retrained on augmented annotations, and its compressed mobile form.
enum class ModelStage { kBase, kEnhanced, kMobile };

const char* ModelStageName(ModelStage stage);
ModelStage ParseModelStage(const std::string& name);

struct ModelDescriptor {
  std::string model_id;
  ModelStage stage = ModelStage::kBase;
  // Expected input shape; 0 for height/width accepts any spatial size.
  int channels = 3;
  int height = 0;
  int width = 0;
  // Output class count, 0 when unknown.
  int num_classes = 0;
  // Optional class names indexed by output channel; index 0 is background.
  std::vector<std::string> class_names;
};

// Per-pixel class distribution laid out class-major (K, H, W).
struct ScoreMapOutput {
  int classes = 0;
  int height = 0;
  int width = 0;
  std::vector<float> probs;

  float prob(int k, int r, int c) const {
    return probs[(static_cast<size_t>(k) * height + r) * width + c];
  }
  std::span<const float> plane(int k) const {
    return {probs.data() + static_cast<size_t>(k) * height * width,
            static_cast<size_t>(height) * width};
  }
  // Throws unless every pixel holds a distribution summing to 1 within 1e-5.
  void Validate() const;
};

// Activations of the designated layer and d(score)/d(activation), both
// laid out (channels, H, W).
struct IntrospectionRecord {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> activations;
  std::vector<float> grads;
};

enum class Concurrency { kConcurrentSafe, kExclusive };

class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;

  virtual const ModelDescriptor& descriptor() const = 0;
  virtual Concurrency concurrency() const { return Concurrency::kConcurrentSafe; }
  virtual bool SupportsIntrospection() const { return false; }

  // Forward pass; use PredictScores, which checks the input contract.
  virtual ScoreMapOutput Predict(const ImageTensor& img) const = 0;

  // Forward pass plus activations and gradients of the class score (mean
  // class probability over `region`, all pixels when the region is empty).
  virtual std::pair<ScoreMapOutput, IntrospectionRecord> IntrospectForward(
      const ImageTensor& img, int class_index, const BinaryMask& region) const;
};

ScoreMapOutput PredictScores(const SegmentationModel& model, const ImageTensor& img);

// Mean class probability over the region; all pixels when it is empty.
double ScalarizeClassScore(const ScoreMapOutput& out, int class_index, const BinaryMask& region);

// Pixels whose argmax class (lowest index wins ties) is `class_index`.
BinaryMask ArgmaxRegion(const ScoreMapOutput& out, int class_index);

// Output channel for a dataset category: by name when the model lists class
// names, foreground channel 1 for binary models, otherwise the category id.
int ResolveClassIndex(const ModelDescriptor& desc, int64_t category_id,
                      const std::string& category_name);

// Black-box scalar score used by RISE and the faithfulness curves. The
// target region is fixed once, from the unperturbed image, and reused for
// every perturbed forward pass.
class ClassScorer {
 public:
  ClassScorer(const SegmentationModel& model, int class_index, BinaryMask region)
      : model_(&model), class_index_(class_index), region_(std::move(region)) {}

  // Region taken from the argmax prediction on `reference`.
  static ClassScorer FrozenOn(const SegmentationModel& model, const ImageTensor& reference,
                              int class_index);
  // Empty region: mean over the whole image.
  static ClassScorer WholeImage(const SegmentationModel& model, int class_index) {
    return ClassScorer(model, class_index, BinaryMask());
  }

  double Score(const ImageTensor& img) const;

  const SegmentationModel& model() const { return *model_; }
  int class_index() const { return class_index_; }
  const BinaryMask& region() const { return region_; }

 private:
  const SegmentationModel* model_;
  int class_index_;
  BinaryMask region_;
};

// ---------------------------------------------------------------------------
// Toy models. Each has a closed form so explainers and metrics can be
// checked against brute-force oracles. All take raw255 or unit images and
// work in unit range; all are binary (background, foreground).

// Every pixel predicts (1 - p, p).
class ConstantModel : public SegmentationModel {
 public:
  explicit ConstantModel(double foreground, int channels = 3);
  const ModelDescriptor& descriptor() const override { return desc_; }
  ScoreMapOutput Predict(const ImageTensor& img) const override;

 private:
  ModelDescriptor desc_;
  double foreground_;
};

// P(fg) at a pixel is its channel-mean intensity, clamped to [0, 1].
class BrightnessToyModel : public SegmentationModel {
 public:
  explicit BrightnessToyModel(int channels = 3);
  const ModelDescriptor& descriptor() const override { return desc_; }
  ScoreMapOutput Predict(const ImageTensor& img) const override;

 private:
  ModelDescriptor desc_;
};

// P(fg) is the same at every pixel: the mean intensity inside a fixed
// template region. The template is either an explicit mask (fixed input
// size) or a fractional rectangle resolved against the input size.
class RegionTemplateModel : public SegmentationModel {
 public:
  struct FractionRect {
    double top = 0.25, left = 0.25, bottom = 0.75, right = 0.75;
  };
  explicit RegionTemplateModel(BinaryMask templ, int channels = 3);
  explicit RegionTemplateModel(FractionRect rect, int channels = 3);

  const ModelDescriptor& descriptor() const override { return desc_; }
  ScoreMapOutput Predict(const ImageTensor& img) const override;
  BinaryMask TemplateFor(int height, int width) const;

 private:
  ModelDescriptor desc_;
  BinaryMask template_;
  FractionRect rect_;
  bool use_rect_;
};

// One 3x3 convolution (edge-clamped) producing `features` channels, a 1x1
// linear head to class logits, and a per-pixel softmax. Gradients are exact.
class LinearConvToyModel : public SegmentationModel {
 public:
  struct Weights {
    int in_channels = 3;
    int features = 4;
    int classes = 2;
    std::vector<float> conv;       // [features][in_channels][3][3]
    std::vector<float> conv_bias;  // [features]
    std::vector<float> head;       // [classes][features]
    std::vector<float> head_bias;  // [classes]
  };

  explicit LinearConvToyModel(Weights weights);
  // Weights drawn uniformly from [-1, 1] with the given seed.
  static LinearConvToyModel Random(uint64_t seed, int in_channels = 3, int features = 4,
                                   int classes = 2);

  const ModelDescriptor& descriptor() const override { return desc_; }
  bool SupportsIntrospection() const override { return true; }
  ScoreMapOutput Predict(const ImageTensor& img) const override;
  std::pair<ScoreMapOutput, IntrospectionRecord> IntrospectForward(
      const ImageTensor& img, int class_index, const BinaryMask& region) const override;

  // Feature maps (features, H, W) of the convolution.
  std::vector<float> Activations(const ImageTensor& img) const;
  ScoreMapOutput HeadForward(std::span<const float> activations, int height, int width) const;
  // Class score computed from activations alone; used for gradient checks.
  double ScoreFromActivations(std::span<const float> activations, int height, int width,
                              int class_index, const BinaryMask& region) const;
  const Weights& weights() const { return weights_; }

 private:
  ModelDescriptor desc_;
  Weights weights_;
};

// Builds a toy model from a short name: "constant[:p]", "brightness",
// "region", "linear-conv[:seed]". Accepts an optional "toy:" prefix.
std::unique_ptr<SegmentationModel> MakeToyModel(const std::string& name);

}  // namespace xedge

#endif  // XEDGE_MODEL_H_
