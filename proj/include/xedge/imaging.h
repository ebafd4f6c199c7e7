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
#ifndef XEDGE_IMAGING_H_
#define XEDGE_IMAGING_H_

#include <cstdint>
#include <span>
#include <vector>

namespace xedge {

enum class RangeTag { kRaw255, kUnit, kNormalized };

const char* RangeTagName(RangeTag tag);

// Channel-major (C, H, W) float image.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, RangeTag range,
              float fill = 0.0f);
  // Takes ownership of `data`; validates length and the range invariant.
  ImageTensor(int channels, int height, int width, RangeTag range,
              std::vector<float> data);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  int plane_size() const { return height_ * width_; }
  RangeTag range() const { return range_; }
  void set_range(RangeTag range) { range_ = range; }
  bool empty() const { return data_.empty(); }

  float& at(int c, int r, int col) {
    return data_[(static_cast<size_t>(c) * height_ + r) * width_ + col];
  }
  float at(int c, int r, int col) const {
    return data_[(static_cast<size_t>(c) * height_ + r) * width_ + col];
  }
  std::span<float> plane(int c) {
    return {data_.data() + static_cast<size_t>(c) * plane_size(),
            static_cast<size_t>(plane_size())};
  }
  std::span<const float> plane(int c) const {
    return {data_.data() + static_cast<size_t>(c) * plane_size(),
            static_cast<size_t>(plane_size())};
  }
  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool operator==(const ImageTensor& other) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  RangeTag range_ = RangeTag::kUnit;
  std::vector<float> data_;
};

struct NormalizationSpec {
  std::vector<float> mean;
  std::vector<float> stddev;

  // Per-channel RGB statistics used by the segmentation backbones.
  static NormalizationSpec ImageNet() {
    return {{0.485f, 0.456f, 0.406f}, {0.229f, 0.224f, 0.225f}};
  }
};

// Row-major presence mask, one byte per pixel (0 or 1).
struct BinaryMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int h, int w, bool value = false);

  bool at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c] != 0; }
  void set(int r, int c, bool v = true) {
    bits[static_cast<size_t>(r) * width + c] = v ? 1 : 0;
  }
  int64_t Count() const;
  bool Empty() const { return Count() == 0; }
  bool SameShape(const BinaryMask& other) const {
    return height == other.height && width == other.width;
  }
  bool operator==(const BinaryMask& other) const = default;
};

BinaryMask MaskUnion(const BinaryMask& a, const BinaryMask& b);
BinaryMask MaskIntersection(const BinaryMask& a, const BinaryMask& b);
// Pixels of `a` not in `b`.
BinaryMask MaskDifference(const BinaryMask& a, const BinaryMask& b);
// True when every set pixel of `inner` is set in `outer`.
bool MaskContains(const BinaryMask& outer, const BinaryMask& inner);

struct SaliencyMap {
  int category = 0;
  int height = 0;
  int width = 0;
  std::vector<float> values;

  SaliencyMap() = default;
  SaliencyMap(int cat, int h, int w, std::vector<float> v);

  float at(int r, int c) const { return values[static_cast<size_t>(r) * width + c]; }
  bool operator==(const SaliencyMap& other) const = default;
};

// Inclusive pixel rectangle.
struct BBoxRect {
  int row_min = 0;
  int row_max = 0;
  int col_min = 0;
  int col_max = 0;

  int64_t Area() const {
    return static_cast<int64_t>(row_max - row_min + 1) * (col_max - col_min + 1);
  }
  bool operator==(const BBoxRect& other) const = default;
};

// Area-based IoU of two inclusive rectangles.
double RectIoU(const BBoxRect& a, const BBoxRect& b);

// Polygon vertex in image coordinates: x is the column, y is the row; the
// center of pixel (r, c) is (x=c, y=r).
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point& other) const = default;
};
using Polygon = std::vector<Point>;

// out = (in / 255 - mean_c) / std_c.
ImageTensor NormalizeImage(const ImageTensor& img, const NormalizationSpec& spec);
// Inverse of NormalizeImage; returns a raw255 image.
ImageTensor DenormalizeImage(const ImageTensor& img, const NormalizationSpec& spec);
// raw255 -> unit by division; unit passes through.
ImageTensor ToUnitRange(const ImageTensor& img);
ImageTensor ToRaw255(const ImageTensor& img);

// Half-pixel-center bilinear resampling with edge clamping.
ImageTensor ResizeBilinear(const ImageTensor& img, int out_h, int out_w);
std::vector<float> ResizePlaneBilinear(std::span<const float> plane, int h, int w,
                                       int out_h, int out_w);

// Separable Gaussian, radius ceil(3 sigma), symmetric reflection at borders.
ImageTensor GaussianBlur(const ImageTensor& img, double sigma);
std::vector<double> GaussianKernel(double sigma);

// Even-odd rule on pixel centers; centers on an edge count as inside.
BinaryMask RasterizePolygon(const Polygon& poly, int h, int w);
BinaryMask RasterizePolygons(const std::vector<Polygon>& polys, int h, int w);
bool PointInPolygon(const Polygon& poly, double x, double y);

// Square structuring element of side 2 * radius + 1, clipped at borders.
BinaryMask DilateMask(const BinaryMask& mask, int radius);

// Sets exactly k pixels: the largest values, ties broken by row-major index.
BinaryMask TopKBinarize(const SaliencyMap& sal, int64_t k);

// Tightest rectangle around the set pixels. Throws on an empty mask.
BBoxRect BBoxOfMask(const BinaryMask& mask);

// Rescales to [0, 1]. A constant map becomes all ones when its value is
// positive and all zeros otherwise.
SaliencyMap MinMaxNormalize(const SaliencyMap& sal);

// Descending-value order of pixel indices, ties by ascending index.
std::vector<int64_t> SaliencyOrder(std::span<const float> values);

}  // namespace xedge

#endif  // XEDGE_IMAGING_H_
