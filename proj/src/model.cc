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
#include "xedge/model.h"

#include <algorithm>
#include <cmath>

#include "xedge/error.h"
#include "xedge/random.h"

namespace xedge {

const char* ModelStageName(ModelStage stage) {
  switch (stage) {
    case ModelStage::kBase: return "base";
    case ModelStage::kEnhanced: return "enhanced";
    case ModelStage::kMobile: return "mobile";
  }
  return "?";
}

ModelStage ParseModelStage(const std::string& name) {
  if (name == "base") return ModelStage::kBase;
  if (name == "enhanced") return ModelStage::kEnhanced;
  if (name == "mobile") return ModelStage::kMobile;
  Fail(ErrorCode::kInvalidArgument, "unknown model stage '" + name + "'");
}

void ScoreMapOutput::Validate() const {
  Require(classes > 0 && height > 0 && width > 0, "score map dimensions must be positive");
  Require(probs.size() == static_cast<size_t>(classes) * height * width,
          "score map length does not match K*H*W");
  const size_t plane = static_cast<size_t>(height) * width;
  for (size_t i = 0; i < plane; ++i) {
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) {
      const float p = probs[k * plane + i];
      if (!std::isfinite(p) || p < 0.0f) {
        Fail(ErrorCode::kBackend, "score map holds a negative or non-finite probability");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-5) {
      Fail(ErrorCode::kBackend, "pixel class distribution sums to " + std::to_string(sum));
    }
  }
}

std::pair<ScoreMapOutput, IntrospectionRecord> SegmentationModel::IntrospectForward(
    const ImageTensor&, int, const BinaryMask&) const {
  Fail(ErrorCode::kUnsupported,
       "model '" + descriptor().model_id + "' does not support introspection");
}

ScoreMapOutput PredictScores(const SegmentationModel& model, const ImageTensor& img) {
  const ModelDescriptor& desc = model.descriptor();
  if (img.channels() != desc.channels) {
    Fail(ErrorCode::kInvalidArgument, "model '" + desc.model_id + "' expects " +
                                          std::to_string(desc.channels) + " channels, got " +
                                          std::to_string(img.channels()));
  }
  if ((desc.height && img.height() != desc.height) || (desc.width && img.width() != desc.width)) {
    Fail(ErrorCode::kInvalidArgument,
         "model '" + desc.model_id + "' expects " + std::to_string(desc.height) + "x" +
             std::to_string(desc.width) + " input, got " + std::to_string(img.height()) + "x" +
             std::to_string(img.width()));
  }
  ScoreMapOutput out = model.Predict(img);
  out.Validate();
  if (out.height != img.height() || out.width != img.width()) {
    Fail(ErrorCode::kBackend, "model output size differs from its input size");
  }
  return out;
}

double ScalarizeClassScore(const ScoreMapOutput& out, int class_index, const BinaryMask& region) {
  if (class_index < 0 || class_index >= out.classes) {
    Fail(ErrorCode::kInvalidArgument, "class index " + std::to_string(class_index) +
                                          " outside model output of " +
                                          std::to_string(out.classes) + " classes");
  }
  const auto plane = out.plane(class_index);
  const bool use_region = !region.bits.empty() && region.Count() > 0;
  if (use_region) {
    Require(region.height == out.height && region.width == out.width,
            "target region dimensions differ from the score map");
  }
  double sum = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < plane.size(); ++i) {
    if (use_region && !region.bits[i]) continue;
    sum += plane[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

BinaryMask ArgmaxRegion(const ScoreMapOutput& out, int class_index) {
  Require(class_index >= 0 && class_index < out.classes, "class index outside model output");
  BinaryMask mask(out.height, out.width);
  const size_t plane = static_cast<size_t>(out.height) * out.width;
  for (size_t i = 0; i < plane; ++i) {
    int best = 0;
    for (int k = 1; k < out.classes; ++k) {
      if (out.probs[k * plane + i] > out.probs[best * plane + i]) best = k;
    }
    mask.bits[i] = best == class_index ? 1 : 0;
  }
  return mask;
}

int ResolveClassIndex(const ModelDescriptor& desc, int64_t category_id,
                      const std::string& category_name) {
  if (!desc.class_names.empty()) {
    for (size_t i = 0; i < desc.class_names.size(); ++i) {
      if (desc.class_names[i] == category_name) return static_cast<int>(i);
    }
    Fail(ErrorCode::kNotFound,
         "model '" + desc.model_id + "' has no class named '" + category_name + "'");
  }
  if (desc.num_classes == 2) return 1;
  return static_cast<int>(category_id);
}

ClassScorer ClassScorer::FrozenOn(const SegmentationModel& model, const ImageTensor& reference,
                                  int class_index) {
  return ClassScorer(model, class_index,
                     ArgmaxRegion(PredictScores(model, reference), class_index));
}

double ClassScorer::Score(const ImageTensor& img) const {
  return ScalarizeClassScore(PredictScores(*model_, img), class_index_, region_);
}

namespace {

ModelDescriptor ToyDescriptor(const std::string& id, int channels) {
  ModelDescriptor d;
  d.model_id = id;
  d.stage = ModelStage::kBase;
  d.channels = channels;
  d.num_classes = 2;
  return d;
}

ScoreMapOutput BinaryOutput(int h, int w, const std::vector<float>& fg) {
  ScoreMapOutput out{2, h, w, std::vector<float>(2 * fg.size())};
  for (size_t i = 0; i < fg.size(); ++i) {
    const float p = std::clamp(fg[i], 0.0f, 1.0f);
    out.probs[i] = 1.0f - p;
    out.probs[fg.size() + i] = p;
  }
  return out;
}

// Channel-mean intensity per pixel, in unit range.
std::vector<float> UnitIntensity(const ImageTensor& img) {
  Require(img.range() != RangeTag::kNormalized, "toy models take raw255 or unit images");
  const float scale = img.range() == RangeTag::kRaw255 ? 1.0f / 255.0f : 1.0f;
  std::vector<float> out(img.plane_size(), 0.0f);
  for (int c = 0; c < img.channels(); ++c) {
    auto plane = img.plane(c);
    for (size_t i = 0; i < out.size(); ++i) out[i] += plane[i];
  }
  for (float& v : out) v = v * scale / static_cast<float>(img.channels());
  return out;
}

}  // namespace

ConstantModel::ConstantModel(double foreground, int channels)
    : desc_(ToyDescriptor("toy:constant", channels)), foreground_(foreground) {
  Require(foreground >= 0.0 && foreground <= 1.0, "constant foreground must lie in [0, 1]");
}

ScoreMapOutput ConstantModel::Predict(const ImageTensor& img) const {
  return BinaryOutput(img.height(), img.width(),
                      std::vector<float>(img.plane_size(), static_cast<float>(foreground_)));
}

BrightnessToyModel::BrightnessToyModel(int channels)
    : desc_(ToyDescriptor("toy:brightness", channels)) {
}

ScoreMapOutput BrightnessToyModel::Predict(const ImageTensor& img) const {
  return BinaryOutput(img.height(), img.width(), UnitIntensity(img));
}

RegionTemplateModel::RegionTemplateModel(BinaryMask templ, int channels)
    : desc_(ToyDescriptor("toy:region", channels)), template_(std::move(templ)), use_rect_(false) {
  Require(template_.Count() > 0, "region template must be nonempty");
  desc_.height = template_.height;
  desc_.width = template_.width;
}

RegionTemplateModel::RegionTemplateModel(FractionRect rect, int channels)
    : desc_(ToyDescriptor("toy:region", channels)), rect_(rect), use_rect_(true) {
  Require(rect.top >= 0 && rect.left >= 0 && rect.bottom <= 1 && rect.right <= 1 &&
              rect.top < rect.bottom && rect.left < rect.right,
          "region template rectangle must be a nonempty sub-rectangle of [0, 1]^2");
}

BinaryMask RegionTemplateModel::TemplateFor(int height, int width) const {
  if (!use_rect_) return template_;
  BinaryMask mask(height, width);
  const int r0 = static_cast<int>(std::floor(rect_.top * height));
  const int c0 = static_cast<int>(std::floor(rect_.left * width));
  const int r1 = std::max(r0 + 1, static_cast<int>(std::ceil(rect_.bottom * height)));
  const int c1 = std::max(c0 + 1, static_cast<int>(std::ceil(rect_.right * width)));
  for (int r = r0; r < std::min(r1, height); ++r) {
    for (int c = c0; c < std::min(c1, width); ++c) mask.set(r, c);
  }
  return mask;
}

ScoreMapOutput RegionTemplateModel::Predict(const ImageTensor& img) const {
  const BinaryMask templ = TemplateFor(img.height(), img.width());
  const auto intensity = UnitIntensity(img);
  double sum = 0.0;
  int64_t n = 0;
  for (size_t i = 0; i < intensity.size(); ++i) {
    if (templ.bits[i]) {
      sum += intensity[i];
      ++n;
    }
  }
  const float p = static_cast<float>(sum / static_cast<double>(n));
  return BinaryOutput(img.height(), img.width(), std::vector<float>(intensity.size(), p));
}

LinearConvToyModel::LinearConvToyModel(Weights weights)
    : desc_(ToyDescriptor("toy:linear-conv", weights.in_channels)), weights_(std::move(weights)) {
  const Weights& w = weights_;
  Require(w.in_channels > 0 && w.features > 0 && w.classes > 1, "invalid linear-conv shape");
  Require(w.conv.size() == static_cast<size_t>(w.features) * w.in_channels * 9 &&
              w.conv_bias.size() == static_cast<size_t>(w.features) &&
              w.head.size() == static_cast<size_t>(w.classes) * w.features &&
              w.head_bias.size() == static_cast<size_t>(w.classes),
          "linear-conv weight sizes do not match the declared shape");
  desc_.num_classes = w.classes;
}

LinearConvToyModel LinearConvToyModel::Random(uint64_t seed, int in_channels, int features,
                                              int classes) {
  Rng rng(seed);
  Weights w;
  w.in_channels = in_channels;
  w.features = features;
  w.classes = classes;
  auto fill = [&](std::vector<float>& v, size_t n) {
    v.resize(n);
    for (float& x : v) x = static_cast<float>(rng.Uniform(-1.0, 1.0));
  };
  fill(w.conv, static_cast<size_t>(features) * in_channels * 9);
  fill(w.conv_bias, features);
  fill(w.head, static_cast<size_t>(classes) * features);
  fill(w.head_bias, classes);
  return LinearConvToyModel(std::move(w));
}

std::vector<float> LinearConvToyModel::Activations(const ImageTensor& img) const {
  Require(img.channels() == weights_.in_channels, "linear-conv input channel mismatch");
  const ImageTensor unit = img.range() == RangeTag::kRaw255 ? ToUnitRange(img) : img;
  const int h = img.height();
  const int w = img.width();
  std::vector<float> act(static_cast<size_t>(weights_.features) * h * w);
  for (int k = 0; k < weights_.features; ++k) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = weights_.conv_bias[k];
        for (int ch = 0; ch < weights_.in_channels; ++ch) {
          const float* kernel = &weights_.conv[((static_cast<size_t>(k) * weights_.in_channels) + ch) * 9];
          for (int dy = -1; dy <= 1; ++dy) {
            const int rr = std::clamp(r + dy, 0, h - 1);
            for (int dx = -1; dx <= 1; ++dx) {
              const int cc = std::clamp(c + dx, 0, w - 1);
              acc += kernel[(dy + 1) * 3 + (dx + 1)] * unit.at(ch, rr, cc);
            }
          }
        }
        act[(static_cast<size_t>(k) * h + r) * w + c] = static_cast<float>(acc);
      }
    }
  }
  return act;
}

ScoreMapOutput LinearConvToyModel::HeadForward(std::span<const float> act, int h, int w) const {
  const int K = weights_.classes;
  const int F = weights_.features;
  const size_t plane = static_cast<size_t>(h) * w;
  Require(act.size() == static_cast<size_t>(F) * plane, "activation size mismatch");
  ScoreMapOutput out{K, h, w, std::vector<float>(static_cast<size_t>(K) * plane)};
  std::vector<double> logits(K);
  for (size_t i = 0; i < plane; ++i) {
    double max_logit = -INFINITY;
    for (int j = 0; j < K; ++j) {
      double l = weights_.head_bias[j];
      for (int f = 0; f < F; ++f) l += weights_.head[j * F + f] * static_cast<double>(act[f * plane + i]);
      logits[j] = l;
      max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (int j = 0; j < K; ++j) z += std::exp(logits[j] - max_logit);
    for (int j = 0; j < K; ++j) {
      out.probs[j * plane + i] = static_cast<float>(std::exp(logits[j] - max_logit) / z);
    }
  }
  return out;
}

ScoreMapOutput LinearConvToyModel::Predict(const ImageTensor& img) const {
  return HeadForward(Activations(img), img.height(), img.width());
}

double LinearConvToyModel::ScoreFromActivations(std::span<const float> act, int h, int w,
                                                int class_index,
                                                const BinaryMask& region) const {
  // Same as scalarizing HeadForward, but kept in double throughout so finite
  // differences of the score stay accurate.
  const int K = weights_.classes;
  const int F = weights_.features;
  const size_t plane = static_cast<size_t>(h) * w;
  Require(act.size() == static_cast<size_t>(F) * plane, "activation size mismatch");
  Require(class_index >= 0 && class_index < K, "class index outside model output");
  const bool use_region = !region.bits.empty() && region.Count() > 0;
  std::vector<double> logits(K);
  double sum = 0.0;
  for (size_t i = 0; i < plane; ++i) {
    if (use_region && !region.bits[i]) continue;
    double max_logit = -INFINITY;
    for (int j = 0; j < K; ++j) {
      double l = weights_.head_bias[j];
      for (int f = 0; f < F; ++f) l += weights_.head[j * F + f] * static_cast<double>(act[f * plane + i]);
      logits[j] = l;
      max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (int j = 0; j < K; ++j) z += std::exp(logits[j] - max_logit);
    sum += std::exp(logits[class_index] - max_logit) / z;
  }
  return sum / (use_region ? static_cast<double>(region.Count()) : static_cast<double>(plane));
}

std::pair<ScoreMapOutput, IntrospectionRecord> LinearConvToyModel::IntrospectForward(
    const ImageTensor& img, int class_index, const BinaryMask& region) const {
  const int h = img.height();
  const int w = img.width();
  const int K = weights_.classes;
  const int F = weights_.features;
  const size_t plane = static_cast<size_t>(h) * w;
  Require(class_index >= 0 && class_index < K, "class index outside model output");

  IntrospectionRecord rec{F, h, w, Activations(img), std::vector<float>(F * plane, 0.0f)};
  ScoreMapOutput out = HeadForward(rec.activations, h, w);

  const bool use_region = !region.bits.empty() && region.Count() > 0;
  const double n = use_region ? static_cast<double>(region.Count()) : static_cast<double>(plane);
  // score = (1/n) sum_{p in R} P_c(p);  dP_c/dl_j = P_c (delta_cj - P_j);
  // dl_j/dA_f = head[j][f].
  std::vector<double> probs(K);
  for (size_t i = 0; i < plane; ++i) {
    if (use_region && !region.bits[i]) continue;
    // Probabilities again in double; the float copies lose too much in 1 - P.
    double max_logit = -INFINITY;
    for (int j = 0; j < K; ++j) {
      double l = weights_.head_bias[j];
      for (int f = 0; f < F; ++f) {
        l += weights_.head[j * F + f] * static_cast<double>(rec.activations[f * plane + i]);
      }
      probs[j] = l;
      max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (int j = 0; j < K; ++j) z += (probs[j] = std::exp(probs[j] - max_logit));
    for (int j = 0; j < K; ++j) probs[j] /= z;
    const double pc = probs[class_index];
    for (int f = 0; f < F; ++f) {
      double g = 0.0;
      for (int j = 0; j < K; ++j) {
        const double delta = (j == class_index ? 1.0 : 0.0) - probs[j];
        g += pc * delta * weights_.head[j * F + f];
      }
      rec.grads[f * plane + i] = static_cast<float>(g / n);
    }
  }
  return {std::move(out), std::move(rec)};
}

std::unique_ptr<SegmentationModel> MakeToyModel(const std::string& spec) {
  std::string name = spec.rfind("toy:", 0) == 0 ? spec.substr(4) : spec;
  std::string arg;
  if (auto colon = name.find(':'); colon != std::string::npos) {
    arg = name.substr(colon + 1);
    name = name.substr(0, colon);
  }
  try {
    if (name == "constant") return std::make_unique<ConstantModel>(arg.empty() ? 0.5 : std::stod(arg));
    if (name == "brightness") return std::make_unique<BrightnessToyModel>();
    if (name == "region") return std::make_unique<RegionTemplateModel>(RegionTemplateModel::FractionRect{});
    if (name == "linear-conv") {
      return std::make_unique<LinearConvToyModel>(
          LinearConvToyModel::Random(arg.empty() ? 7 : std::stoull(arg)));
    }
  } catch (const std::logic_error&) {
    Fail(ErrorCode::kInvalidArgument, "bad toy model argument in '" + spec + "'");
  }
  Fail(ErrorCode::kNotFound, "unknown toy model '" + spec + "'");
}

}  // namespace xedge
